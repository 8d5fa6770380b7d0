#include "rai_forge/json_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "rai_forge/error.hpp"

namespace raiforge {

namespace {

template <class E>
void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const char* what) {
  if (!j.is_object()) throw E(std::string(what) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw E(std::string(what) + ": unknown key \"" + key + "\"");
  }
}

template <class E>
const Json& require(const Json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw E(std::string(what) + ": missing key \"" + key + "\"");
  return *it;
}

template <class E>
double number(const Json& v, const char* key) {
  if (!v.is_number()) throw E(std::string(key) + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw E(std::string(key) + ": must be finite");
  return x;
}

template <class E>
long long integer(const Json& v, const char* key) {
  if (!v.is_number_integer()) throw E(std::string(key) + ": expected an integer");
  return v.get<long long>();
}

template <class E>
std::size_t count(const Json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  const long long x = integer<E>(v, key);
  if (x < 0) throw E(std::string(key) + ": must be nonnegative");
  return static_cast<std::size_t>(x);
}

template <class E>
std::string text(const Json& v, const char* key) {
  if (!v.is_string()) throw E(std::string(key) + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> reals(const Json& v, const char* key, std::size_t expected) {
  if (!v.is_array()) throw ConfigError(std::string(key) + ": expected an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number<ConfigError>(x, key));
  if (out.size() != expected)
    throw ConfigError(std::string(key) + ": expected " + std::to_string(expected) + " entries, got " +
                      std::to_string(out.size()));
  return out;
}

int positive_int(const Json& j, const char* key, const char* what) {
  const long long x = integer<ConfigError>(require<ConfigError>(j, key, what), key);
  if (x < 1 || x > 1'000'000) throw ConfigError(std::string(key) + ": must be a positive integer");
  return static_cast<int>(x);
}

int label(const Json& j, const char* key) {
  const long long x = integer<ConfigError>(require<ConfigError>(j, key, "stump"), key);
  if (x < 0 || x > 1'000'000) throw ConfigError(std::string(key) + ": labels must be nonnegative");
  return static_cast<int>(x);
}

template <class Enum>
struct Name {
  Enum value;
  const char* name;
};

constexpr Name<Algorithm> kAlgorithms[] = {{Algorithm::GamePlay, "game_play"},
                                           {Algorithm::FrankWolfe, "frank_wolfe"},
                                           {Algorithm::GenAdaBoost, "gen_adaboost"},
                                           {Algorithm::ERM, "erm"},
                                           {Algorithm::AdaBoost, "adaboost"},
                                           {Algorithm::OnlineGDRO, "online_gdro"}};
constexpr Name<EtaSchedule> kSchedules[] = {{EtaSchedule::Constant, "constant"},
                                            {EtaSchedule::LinearInRound, "linear_in_round"}};
constexpr Name<LineSearchMode> kModes[] = {{LineSearchMode::None, "none"},
                                           {LineSearchMode::InverseT, "inverse_t"},
                                           {LineSearchMode::Exact, "exact"},
                                           {LineSearchMode::BallAroundInverseT, "ball_around_inverse_t"},
                                           {LineSearchMode::UnitInterval, "unit_interval"}};
constexpr Name<LearnerKind> kLearners[] = {
    {LearnerKind::Stump, "stump"}, {LearnerKind::Linear, "linear"}, {LearnerKind::Mlp, "mlp"}};

template <class Enum, std::size_t N>
const char* name_of(const Name<Enum> (&table)[N], Enum v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class Enum, std::size_t N>
Enum parse_name(const Name<Enum> (&table)[N], const Json& v, const char* key) {
  const std::string s = text<ConfigError>(v, key);
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string options;
  for (const auto& e : table) options += (options.empty() ? "" : "|") + std::string(e.name);
  throw ConfigError(std::string(key) + ": unknown value \"" + s + "\" (expected " + options + ")");
}

}  // namespace

Json to_json(const UncertaintySetSpec& spec) {
  switch (spec.kind) {
    case SetKind::ERM: return {{"kind", "erm"}};
    case SetKind::Simplex: return {{"kind", "simplex"}};
    case SetKind::KLBall: return {{"kind", "kl"}, {"rho", spec.rho}};
    case SetKind::CVaR: return {{"kind", "cvar"}, {"alpha", spec.alpha}};
    case SetKind::Chi2Ball: return {{"kind", "chi2"}, {"rho", spec.rho}};
    case SetKind::GroupDRO: return {{"kind", "group"}};
    case SetKind::Intersection: {
      Json members = Json::array();
      for (const auto& m : spec.members) members.push_back(to_json(m));
      return {{"kind", "intersection"}, {"members", members}};
    }
  }
  return {};
}

UncertaintySetSpec set_spec_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidSpec("set: expected an object");
  const std::string kind = text<InvalidSpec>(require<InvalidSpec>(j, "kind", "set"), "kind");
  UncertaintySetSpec spec;
  if (kind == "erm" || kind == "simplex" || kind == "group") {
    check_keys<InvalidSpec>(j, {"kind"}, "set");
    spec = kind == "erm" ? UncertaintySetSpec::erm()
                         : kind == "simplex" ? UncertaintySetSpec::simplex() : UncertaintySetSpec::group();
  } else if (kind == "kl" || kind == "chi2") {
    check_keys<InvalidSpec>(j, {"kind", "rho"}, "set");
    const double rho = number<InvalidSpec>(require<InvalidSpec>(j, "rho", "set"), "rho");
    spec = kind == "kl" ? UncertaintySetSpec::kl(rho) : UncertaintySetSpec::chi2(rho);
  } else if (kind == "cvar") {
    check_keys<InvalidSpec>(j, {"kind", "alpha"}, "set");
    spec = UncertaintySetSpec::cvar(number<InvalidSpec>(require<InvalidSpec>(j, "alpha", "set"), "alpha"));
  } else if (kind == "intersection") {
    check_keys<InvalidSpec>(j, {"kind", "members"}, "set");
    const Json& members = require<InvalidSpec>(j, "members", "set");
    if (!members.is_array()) throw InvalidSpec("members: expected an array");
    std::vector<UncertaintySetSpec> parts;
    for (const auto& m : members) parts.push_back(set_spec_from_json(m));
    spec = UncertaintySetSpec::intersection(std::move(parts));
  } else {
    throw InvalidSpec("set: unknown kind \"" + kind + "\"");
  }
  spec.validate();
  return spec;
}

Json to_json(const Hypothesis& h) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Stump>) {
          return {{"kind", "stump"}, {"feature", m.feature}, {"threshold", m.threshold}, {"left", m.left},
                  {"right", m.right}};
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          return {{"kind", "linear"}, {"dim", m.dim}, {"classes", m.classes}, {"weights", m.weights},
                  {"bias", m.bias}};
        } else {
          return {{"kind", "mlp"}, {"dim", m.dim}, {"hidden", m.hidden}, {"classes", m.classes},
                  {"w1", m.w1}, {"b1", m.b1}, {"w2", m.w2}, {"b2", m.b2}};
        }
      },
      h);
}

Hypothesis hypothesis_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("hypothesis: expected an object");
  const std::string kind = text<ConfigError>(require<ConfigError>(j, "kind", "hypothesis"), "kind");
  if (kind == "stump") {
    check_keys<ConfigError>(j, {"kind", "feature", "threshold", "left", "right"}, "stump");
    Stump s;
    const long long f = integer<ConfigError>(require<ConfigError>(j, "feature", "stump"), "feature");
    if (f < 0 || f > 1'000'000) throw ConfigError("feature: must be a nonnegative index");
    s.feature = static_cast<int>(f);
    s.threshold = number<ConfigError>(require<ConfigError>(j, "threshold", "stump"), "threshold");
    s.left = label(j, "left");
    s.right = label(j, "right");
    return s;
  }
  if (kind == "linear") {
    check_keys<ConfigError>(j, {"kind", "dim", "classes", "weights", "bias"}, "linear");
    LinearModel m;
    m.dim = positive_int(j, "dim", "linear");
    m.classes = positive_int(j, "classes", "linear");
    m.weights = reals(require<ConfigError>(j, "weights", "linear"), "weights",
                      static_cast<std::size_t>(m.dim) * static_cast<std::size_t>(m.classes));
    m.bias = reals(require<ConfigError>(j, "bias", "linear"), "bias", static_cast<std::size_t>(m.classes));
    return m;
  }
  if (kind == "mlp") {
    check_keys<ConfigError>(j, {"kind", "dim", "hidden", "classes", "w1", "b1", "w2", "b2"}, "mlp");
    MlpModel m;
    m.dim = positive_int(j, "dim", "mlp");
    m.hidden = positive_int(j, "hidden", "mlp");
    m.classes = positive_int(j, "classes", "mlp");
    const auto d = static_cast<std::size_t>(m.dim), h = static_cast<std::size_t>(m.hidden),
               c = static_cast<std::size_t>(m.classes);
    m.w1 = reals(require<ConfigError>(j, "w1", "mlp"), "w1", h * d);
    m.b1 = reals(require<ConfigError>(j, "b1", "mlp"), "b1", h);
    m.w2 = reals(require<ConfigError>(j, "w2", "mlp"), "w2", c * h);
    m.b2 = reals(require<ConfigError>(j, "b2", "mlp"), "b2", c);
    return m;
  }
  throw ConfigError("hypothesis: unknown kind \"" + kind + "\"");
}

Json to_json(const Ensemble& q) {
  const Ensemble n = q.normalized();
  Json members = Json::array();
  for (const auto& m : n.members()) members.push_back({{"mass", m.mass}, {"hypothesis", to_json(m.hypothesis)}});
  return {{"members", members}, {"normalized", true}};
}

Ensemble ensemble_from_json(const Json& j) {
  check_keys<ConfigError>(j, {"members", "normalized"}, "ensemble");
  const Json& members = require<ConfigError>(j, "members", "ensemble");
  if (!members.is_array() || members.empty()) throw ConfigError("members: expected a non-empty array");
  const Json& flag = require<ConfigError>(j, "normalized", "ensemble");
  if (!flag.is_boolean()) throw ConfigError("normalized: expected a boolean");
  std::vector<EnsembleMember> out;
  for (const auto& m : members) {
    check_keys<ConfigError>(m, {"mass", "hypothesis"}, "member");
    const double mass = number<ConfigError>(require<ConfigError>(m, "mass", "member"), "mass");
    if (mass < 0.0) throw ConfigError("mass: must be nonnegative");
    out.push_back({hypothesis_from_json(require<ConfigError>(m, "hypothesis", "member")), mass});
  }
  try {
    return Ensemble(std::move(out), flag.get<bool>());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("ensemble: ") + e.what());
  }
}

Json to_json(const SolverConfig& cfg) {
  Json pool = Json::array();
  for (const auto& h : cfg.pool) pool.push_back(to_json(h));
  return {{"algorithm", name_of(kAlgorithms, cfg.algorithm)},
          {"set", to_json(cfg.set)},
          {"eta", cfg.eta},
          {"eta_growth", cfg.eta_growth},
          {"rounds", cfg.rounds},
          {"eta_schedule", name_of(kSchedules, cfg.eta_schedule)},
          {"learner_kind", name_of(kLearners, cfg.learner.kind)},
          {"hidden_width", cfg.learner.hidden},
          {"budget",
           {{"iterations", cfg.learner.budget.iterations},
            {"batch_size", cfg.learner.budget.batch_size},
            {"learning_rate", cfg.learner.budget.learning_rate},
            {"seed", cfg.learner.budget.seed}}},
          {"line_search",
           {{"mode", name_of(kModes, cfg.line_search.mode)}, {"radius_fraction", cfg.line_search.radius_fraction}}},
          {"seed", cfg.seed},
          {"warmup_rounds", cfg.warmup_rounds},
          {"validation_fraction", cfg.validation_fraction},
          {"gdro_step", cfg.gdro_step},
          {"pool", pool}};
}

SolverConfig config_from_json(const Json& j) {
  check_keys<ConfigError>(j,
                          {"algorithm", "set", "eta", "eta_growth", "rounds", "eta_schedule", "learner_kind",
                           "hidden_width", "budget", "line_search", "seed", "warmup_rounds",
                           "validation_fraction", "gdro_step", "pool"},
                          "config");
  SolverConfig cfg;
  cfg.algorithm = parse_name(kAlgorithms, require<ConfigError>(j, "algorithm", "config"), "algorithm");
  if (auto it = j.find("set"); it != j.end()) {
    try {
      cfg.set = set_spec_from_json(*it);
    } catch (const InvalidSpec& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto it = j.find("eta"); it != j.end()) cfg.eta = number<ConfigError>(*it, "eta");
  if (auto it = j.find("eta_growth"); it != j.end()) cfg.eta_growth = number<ConfigError>(*it, "eta_growth");
  if (auto it = j.find("rounds"); it != j.end()) cfg.rounds = count<ConfigError>(*it, "rounds");
  if (auto it = j.find("eta_schedule"); it != j.end()) cfg.eta_schedule = parse_name(kSchedules, *it, "eta_schedule");
  if (auto it = j.find("learner_kind"); it != j.end()) cfg.learner.kind = parse_name(kLearners, *it, "learner_kind");
  if (auto it = j.find("hidden_width"); it != j.end()) {
    const long long h = integer<ConfigError>(*it, "hidden_width");
    if (h < 1 || h > 100'000) throw ConfigError("hidden_width: must be a positive integer");
    cfg.learner.hidden = static_cast<int>(h);
  }
  if (auto it = j.find("budget"); it != j.end()) {
    check_keys<ConfigError>(*it, {"iterations", "batch_size", "learning_rate", "seed"}, "budget");
    auto& b = cfg.learner.budget;
    if (auto k = it->find("iterations"); k != it->end()) b.iterations = count<ConfigError>(*k, "iterations");
    if (auto k = it->find("batch_size"); k != it->end()) b.batch_size = count<ConfigError>(*k, "batch_size");
    if (auto k = it->find("learning_rate"); k != it->end()) b.learning_rate = number<ConfigError>(*k, "learning_rate");
    if (auto k = it->find("seed"); k != it->end()) b.seed = count<ConfigError>(*k, "seed");
  }
  if (auto it = j.find("line_search"); it != j.end()) {
    check_keys<ConfigError>(*it, {"mode", "radius_fraction"}, "line_search");
    if (auto k = it->find("mode"); k != it->end()) cfg.line_search.mode = parse_name(kModes, *k, "mode");
    if (auto k = it->find("radius_fraction"); k != it->end())
      cfg.line_search.radius_fraction = number<ConfigError>(*k, "radius_fraction");
  }
  if (auto it = j.find("seed"); it != j.end()) cfg.seed = count<ConfigError>(*it, "seed");
  if (auto it = j.find("warmup_rounds"); it != j.end()) cfg.warmup_rounds = count<ConfigError>(*it, "warmup_rounds");
  if (auto it = j.find("validation_fraction"); it != j.end())
    cfg.validation_fraction = number<ConfigError>(*it, "validation_fraction");
  if (auto it = j.find("gdro_step"); it != j.end()) cfg.gdro_step = number<ConfigError>(*it, "gdro_step");
  if (auto it = j.find("pool"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("pool: expected an array");
    for (const auto& h : *it) cfg.pool.push_back(hypothesis_from_json(h));
  }
  cfg.validate();
  return cfg;
}

Json to_json(const MetricsReport& m) {
  Json per_class = Json::object(), per_group = Json::object();
  for (const auto& [k, v] : m.per_class) per_class[std::to_string(k)] = v;
  for (const auto& [k, v] : m.per_group) per_group[std::to_string(k)] = v;
  Json j = {{"average", m.average},
            {"worst_class", m.worst_class},
            {"per_class", per_class},
            {"randomized_risk", m.randomized_risk},
            {"deterministic_risk", m.deterministic_risk},
            {"gamma_q", m.gamma_q}};
  if (m.worst_group) {
    j["worst_group"] = *m.worst_group;
    j["per_group"] = per_group;
  }
  return j;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace raiforge
