#include "cel/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cel/errors.hpp"

namespace cel {
namespace {

using nlohmann::json;

// A JSON object together with its path, so every error can name the field.
class Node {
 public:
  Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const json& value() const { return *value_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& reason) const {
    throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": " + reason);
  }

  Node object(std::initializer_list<const char*> allowed) const {
    if (!value_->is_object()) fail("expected an object");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : value_->items()) {
      if (!keys.count(k)) child_path_node(k).fail("unknown field");
    }
    return *this;
  }

  bool has(const std::string& key) const { return value_->contains(key); }

  Node at(const std::string& key) const {
    if (!value_->contains(key)) child_path_node(key).fail("missing required field");
    return Node((*value_)[key], join(key));
  }

  Node index(std::size_t i) const {
    return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  std::size_t array_size() const {
    if (!value_->is_array()) fail("expected an array");
    return value_->size();
  }

  double number() const {
    if (!value_->is_number()) fail("expected a number");
    const double v = value_->get<double>();
    if (!std::isfinite(v)) fail("must be finite");
    return v;
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be > 0");
    return v;
  }

  double non_negative() const {
    const double v = number();
    if (v < 0.0) fail("must be >= 0");
    return v;
  }

  std::string string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }

  JointVector vector(int n) const {
    if (array_size() != static_cast<std::size_t>(n)) {
      fail("expected " + std::to_string(n) + " entries, one per joint");
    }
    JointVector v(n);
    for (int i = 0; i < n; ++i) v(i) = index(static_cast<std::size_t>(i)).number();
    return v;
  }

  JointVector positive_vector(int n) const {
    JointVector v = vector(n);
    for (int i = 0; i < n; ++i) {
      if (!(v(i) > 0.0)) index(static_cast<std::size_t>(i)).fail("must be > 0");
    }
    return v;
  }

 private:
  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  Node child_path_node(const std::string& key) const {
    static const json kNull;
    return Node(kNull, join(key));
  }

  const json* value_;
  std::string path_;
};

Integrator parse_integrator(const Node& node) {
  const std::string name = node.string();
  if (name == to_string(Integrator::kSemiImplicitEuler)) {
    return Integrator::kSemiImplicitEuler;
  }
  if (name == to_string(Integrator::kRk4)) return Integrator::kRk4;
  node.fail("unknown integrator '" + name + "' (expected " +
            to_string(Integrator::kSemiImplicitEuler) + " or " +
            to_string(Integrator::kRk4) + ")");
}

ControllerConfig parse_controller(const Node& node, const ManipulatorModel& model,
                                  LearningMode mode) {
  ControllerConfig c = ControllerConfig::Defaults(model, mode);
  node.object({"lambda1_per_s", "lambda2_nms_per_rad", "gamma", "kappa", "sigma0", "c_w"});
  const int n = model.dof();
  if (node.has("lambda1_per_s")) c.lambda1 = node.at("lambda1_per_s").positive_vector(n);
  if (node.has("lambda2_nms_per_rad")) {
    c.lambda2 = node.at("lambda2_nms_per_rad").positive_vector(n);
  }
  if (node.has("gamma")) c.gamma = node.at("gamma").non_negative();
  if (node.has("kappa")) c.kappa = node.at("kappa").non_negative();
  if (node.has("sigma0")) c.sigma0 = node.at("sigma0").positive();
  if (node.has("c_w")) c.c_w = node.at("c_w").positive();
  return c;
}

// Uniform in [-1, 1) from the top 53 bits, identical on every platform.
double unit_symmetric(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

json vector_json(const JointVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json controller_json(const ControllerConfig& c) {
  return {{"lambda1_per_s", vector_json(c.lambda1)},
          {"lambda2_nms_per_rad", vector_json(c.lambda2)},
          {"gamma", c.gamma},
          {"kappa", c.kappa},
          {"sigma0", c.sigma0},
          {"c_w", c.c_w}};
}

}  // namespace

ManipulatorModel ExperimentConfig::model() const {
  return ManipulatorModel(links, gravity_mps2, friction);
}

JointVector ExperimentConfig::initial_q() const {
  JointVector q = q0;
  if (seed && jitter_rad > 0.0) {
    std::mt19937_64 rng(*seed);
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) += jitter_rad * unit_symmetric(rng);
  }
  return q;
}

CommandSchedule ExperimentConfig::schedule() const {
  return CommandSchedule(initial_q(), tasks);
}

ClosedLoopSetup ExperimentConfig::setup(LearningMode mode) const {
  ClosedLoopSetup s;
  s.controller = mode == LearningMode::kFel ? fel : cel;
  s.controller.mode = mode;
  s.estimation = estimation;
  s.schedule = schedule();
  s.q0 = initial_q();
  s.qd0 = qd0;
  return s;
}

ExperimentConfig parse_config(const json& doc) {
  const Node root = Node(doc, "").object({"model", "sim", "initial_state", "estimation",
                                          "controllers", "tasks", "output_dir", "seed"});
  ExperimentConfig cfg;

  const Node model = root.at("model").object({"links", "gravity_mps2", "friction"});
  const Node links = model.at("links");
  const std::size_t n_links = links.array_size();
  if (n_links < 1 || n_links > 2) links.fail("expected 1 or 2 links");
  for (std::size_t i = 0; i < n_links; ++i) {
    const Node l = links.index(i).object({"mass_kg", "length_m", "com_m", "inertia_kgm2"});
    LinkParams p;
    p.mass_kg = l.at("mass_kg").positive();
    p.length_m = l.at("length_m").positive();
    p.com_m = l.at("com_m").positive();
    p.inertia_kgm2 = l.at("inertia_kgm2").non_negative();
    cfg.links.push_back(p);
  }
  const int n = static_cast<int>(n_links);
  if (model.has("gravity_mps2")) cfg.gravity_mps2 = model.at("gravity_mps2").non_negative();
  const Node fr = model.at("friction").object({"viscous_nms_per_rad", "coulomb_nm"});
  cfg.friction.viscous = fr.at("viscous_nms_per_rad").positive_vector(n);
  cfg.friction.coulomb = fr.at("coulomb_nm").positive_vector(n);

  ManipulatorModel plant = [&] {
    try {
      return cfg.model();
    } catch (const InvalidInput& e) {
      model.fail(e.what());
    }
  }();

  bool duration_given = false;
  if (root.has("sim")) {
    const Node sim =
        root.at("sim").object({"dt_s", "duration_s", "v_eps_rad_per_s", "integrator"});
    if (sim.has("dt_s")) cfg.sim.dt_s = sim.at("dt_s").positive();
    if (sim.has("duration_s")) {
      cfg.sim.duration_s = sim.at("duration_s").positive();
      duration_given = true;
    }
    if (sim.has("v_eps_rad_per_s")) {
      cfg.sim.v_eps = sim.at("v_eps_rad_per_s").non_negative();
    }
    if (sim.has("integrator")) cfg.sim.integrator = parse_integrator(sim.at("integrator"));
  }

  cfg.q0 = JointVector::Zero(n);
  cfg.qd0 = JointVector::Zero(n);
  if (root.has("initial_state")) {
    const Node init = root.at("initial_state").object({"q_rad", "qd_rad_per_s", "jitter_rad"});
    if (init.has("q_rad")) cfg.q0 = init.at("q_rad").vector(n);
    if (init.has("qd_rad_per_s")) cfg.qd0 = init.at("qd_rad_per_s").vector(n);
    if (init.has("jitter_rad")) cfg.jitter_rad = init.at("jitter_rad").non_negative();
  }

  if (root.has("estimation")) {
    const Node est = root.at("estimation").object({"alpha_per_s", "tau_d_s", "sigma_e"});
    if (est.has("alpha_per_s")) cfg.estimation.alpha_per_s = est.at("alpha_per_s").positive();
    if (est.has("tau_d_s")) cfg.estimation.tau_d_s = est.at("tau_d_s").positive();
    if (est.has("sigma_e")) cfg.estimation.sigma_e = est.at("sigma_e").positive();
  }

  cfg.fel = ControllerConfig::Defaults(plant, LearningMode::kFel);
  cfg.cel = ControllerConfig::Defaults(plant, LearningMode::kCel);
  if (root.has("controllers")) {
    const Node ctl = root.at("controllers").object({"fel", "cel"});
    if (ctl.has("fel")) cfg.fel = parse_controller(ctl.at("fel"), plant, LearningMode::kFel);
    if (ctl.has("cel")) cfg.cel = parse_controller(ctl.at("cel"), plant, LearningMode::kCel);
  }

  const Node tasks = root.at("tasks");
  for (std::size_t i = 0; i < tasks.array_size(); ++i) {
    const Node tn = tasks.index(i).object({"duration_s", "steps"});
    Task task;
    task.duration_s = tn.at("duration_s").positive();
    const Node steps = tn.at("steps");
    double prev = 0.0;
    for (std::size_t k = 0; k < steps.array_size(); ++k) {
      const Node sn = steps.index(k).object({"at_s", "q_c_rad"});
      CommandStep s;
      s.at_s = sn.at("at_s").non_negative();
      if (s.at_s < prev) sn.at("at_s").fail("steps must be sorted by time");
      if (s.at_s >= task.duration_s) sn.at("at_s").fail("must be earlier than the task end");
      prev = s.at_s;
      s.q_c = sn.at("q_c_rad").vector(n);
      task.steps.push_back(std::move(s));
    }
    cfg.tasks.push_back(std::move(task));
  }

  double total = 0.0;
  for (const Task& t : cfg.tasks) total += t.duration_s;
  if (!cfg.tasks.empty()) {
    if (!duration_given) {
      cfg.sim.duration_s = total;
    } else if (std::abs(cfg.sim.duration_s - total) > 1e-9 * std::max(1.0, total)) {
      root.at("sim").at("duration_s").fail("must equal the summed task durations (" +
                                           std::to_string(total) + " s)");
    }
  } else if (!duration_given) {
    tasks.fail("an empty task list needs sim.duration_s");
  }
  if (cfg.sim.duration_s < cfg.sim.dt_s) {
    root.at("sim").at("duration_s").fail("must be >= sim.dt_s");
  }
  if (cfg.estimation.tau_d_s < cfg.sim.dt_s) {
    root.at("estimation").at("tau_d_s").fail("must be >= sim.dt_s");
  }

  if (root.has("output_dir")) cfg.output_dir = root.at("output_dir").string();
  if (root.has("seed")) {
    const Node s = root.at("seed");
    if (!s.value().is_number_unsigned() && !(s.value().is_number_integer() &&
                                             s.value().get<long long>() >= 0)) {
      s.fail("expected a non-negative integer");
    }
    cfg.seed = s.value().get<std::uint64_t>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  const ManipulatorModel model = ManipulatorModel::DefaultTwoLink();
  cfg.links = model.links();
  cfg.gravity_mps2 = model.gravity();
  cfg.friction = model.friction();
  cfg.q0 = JointVector::Zero(2);
  cfg.qd0 = JointVector::Zero(2);
  cfg.fel = ControllerConfig::Defaults(model, LearningMode::kFel);
  cfg.cel = ControllerConfig::Defaults(model, LearningMode::kCel);
  auto cmd = [](double a, double b) {
    JointVector v(2);
    v << a, b;
    return v;
  };
  for (int i = 0; i < 5; ++i) {
    Task t;
    t.duration_s = 50.0;
    t.steps = {{0.0, cmd(1, 1)}, {1.0, cmd(-1, 1)}, {2.0, cmd(-1, -1)},
               {3.0, cmd(1, -1)}, {4.0, cmd(0, 0)}};
    cfg.tasks.push_back(t);
  }
  cfg.sim.duration_s = 250.0;
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json links = json::array();
  for (const LinkParams& l : cfg.links) {
    links.push_back({{"mass_kg", l.mass_kg},
                     {"length_m", l.length_m},
                     {"com_m", l.com_m},
                     {"inertia_kgm2", l.inertia_kgm2}});
  }
  json tasks = json::array();
  for (const Task& t : cfg.tasks) {
    json steps = json::array();
    for (const CommandStep& s : t.steps) {
      steps.push_back({{"at_s", s.at_s}, {"q_c_rad", vector_json(s.q_c)}});
    }
    tasks.push_back({{"duration_s", t.duration_s}, {"steps", steps}});
  }
  json doc = {
      {"model",
       {{"links", links},
        {"gravity_mps2", cfg.gravity_mps2},
        {"friction",
         {{"viscous_nms_per_rad", vector_json(cfg.friction.viscous)},
          {"coulomb_nm", vector_json(cfg.friction.coulomb)}}}}},
      {"sim",
       {{"dt_s", cfg.sim.dt_s},
        {"duration_s", cfg.sim.duration_s},
        {"v_eps_rad_per_s", cfg.sim.v_eps},
        {"integrator", to_string(cfg.sim.integrator)}}},
      {"initial_state",
       {{"q_rad", vector_json(cfg.q0)},
        {"qd_rad_per_s", vector_json(cfg.qd0)},
        {"jitter_rad", cfg.jitter_rad}}},
      {"estimation",
       {{"alpha_per_s", cfg.estimation.alpha_per_s},
        {"tau_d_s", cfg.estimation.tau_d_s},
        {"sigma_e", cfg.estimation.sigma_e}}},
      {"controllers", {{"fel", controller_json(cfg.fel)}, {"cel", controller_json(cfg.cel)}}},
      {"tasks", tasks},
      {"output_dir", cfg.output_dir}};
  if (cfg.seed) doc["seed"] = *cfg.seed;
  return doc;
}

}  // namespace cel
