#pragma once

// Run configuration: one JSON document with sections env, idm, mobil, rl,
// gate, trainer and io. Every field is bound by (section, key); unknown keys
// are rejected, and command-line overrides address fields as "section.key".

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hcpi/core/error.hpp"
#include "hcpi/env/highway_env.hpp"
#include "hcpi/gate/importance.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/train.hpp"

namespace hcpi::trainer {

using Json = nlohmann::ordered_json;

enum class GateMode { Hcpi, AlwaysAccept, RuleOnly };

inline std::string to_string(GateMode m) {
  switch (m) {
    case GateMode::Hcpi: return "hcpi";
    case GateMode::AlwaysAccept: return "always_accept";
    case GateMode::RuleOnly: return "rule_only";
  }
  return "?";
}

inline GateMode parse_gate_mode(const std::string& s) {
  if (s == "hcpi") return GateMode::Hcpi;
  if (s == "always_accept") return GateMode::AlwaysAccept;
  if (s == "rule_only") return GateMode::RuleOnly;
  throw ConfigError("gate.mode: expected hcpi, always_accept or rule_only, got '" + s + "'");
}

/// Scenario knobs that default to the named scenario's own values.
struct ScenarioOverrides {
  std::optional<int> episode_steps;
  std::optional<double> dt;
  std::optional<double> ego_speed;
  std::optional<double> lead_distance;
  std::optional<double> brake_rate;
  std::optional<double> cut_in_speed;
  std::optional<double> demand;
  std::optional<double> max_distance;
};

struct TrainerConfig {
  // env
  env::EnvConfig env;
  std::string scenario = "emergency_brake";
  ScenarioOverrides scenario_overrides;

  // rl
  // minibatches per epoch capped at 20 so a cycle's cost stays flat while
  // rejected data accumulates
  rl::UpdateConfig update = [] {
    rl::UpdateConfig u;
    u.updates_per_epoch = 20;
    return u;
  }();
  double lr_actor = 3e-4;   // alpha_a
  double lr_critic = 3e-4;  // alpha_c
  int hidden = 256;
  double sigma_init = 0.5;
  double accel_scale = 3.5;  // m/s^2 per unit of raw action
  double steer_scale = 0.05; // rad per unit of raw action

  // gate
  GateMode mode = GateMode::Hcpi;
  double delta = 0.90;
  int bootstrap = 2000;  // B
  std::string bounds_rule = "calibrated";  // or "worst_case"; see NormalizationBounds
  std::optional<double> return_upper;  // R+; derived from the reward when unset
  std::optional<double> return_lower;  // R-

  // trainer
  double max_steps = 400000;  // M, counted as sum of realized lengths / 3
  int trajectories_per_cycle = 39;  // beta
  std::optional<std::uint64_t> seed;
  int eval_episodes = 20;     // per-cycle matched-seed evaluation of candidate and current policy
  bool hybrid = false;        // arbitrate between the RL and rule policies for deployment
  int hybrid_episodes = 10;   // E_eval
  int checkpoint_every = 10;
  int max_cycles = 0;         // 0: no cap
  double wall_budget = 0.0;   // s, 0: no budget

  // io
  std::string run_name;
  int export_episodes = 3;

  env::ScenarioSpec scenario_spec() const {
    env::ScenarioSpec s = env::scenario_by_name(scenario);
    const auto& o = scenario_overrides;
    if (o.episode_steps) s.episode_steps = *o.episode_steps;
    if (o.dt) s.dt = *o.dt;
    if (o.ego_speed) s.ego_speed = *o.ego_speed;
    if (o.lead_distance) s.lead_distance = *o.lead_distance;
    if (o.brake_rate) s.brake_rate = *o.brake_rate;
    if (o.cut_in_speed) s.cut_in_speed = *o.cut_in_speed;
    if (o.demand) s.demand = *o.demand;
    if (o.max_distance) s.max_distance = *o.max_distance;
    return s;
  }

  gate::NormalizationBounds bounds() const {
    const auto spec = scenario_spec();
    auto b = bounds_rule == "worst_case"
                 ? gate::NormalizationBounds::from_reward(spec.episode_steps, update.gamma, env.weights, env.limits, spec.dt)
                 : gate::NormalizationBounds::calibrated(spec.episode_steps, update.gamma, env.weights, env.limits, spec.dt);
    if (return_upper) b.upper = *return_upper;
    if (return_lower) b.lower = *return_lower;
    b.validate();
    return b;
  }

  rl::ActionMapping action_mapping() const {
    rl::ActionMapping m;
    m.scale << accel_scale, steer_scale;
    return m;
  }

  std::uint64_t require_seed() const {
    if (!seed) throw ConfigError("trainer.seed is mandatory (set it in the config file or pass --seed)");
    return *seed;
  }

  void validate() const {
    env.road.validate();
    env.rule.idm.validate();
    env.rule.mobil.validate();
    scenario_spec().validate(env.road.lane_count);
    if (bounds_rule != "calibrated" && bounds_rule != "worst_case")
      throw ConfigError("gate.bounds must be 'calibrated' or 'worst_case', got '" + bounds_rule + "'");
    bounds();
    if (!(env.limits.accel_min < 0.0 && env.limits.accel_max > 0.0)) throw ConfigError("env: bad acceleration range");
    if (!(env.limits.steer_max > 0.0)) throw ConfigError("env.steer_max must be positive");
    if (trajectories_per_cycle <= 0 || trajectories_per_cycle % 3 != 0)
      throw ConfigError("trainer.beta must be a positive multiple of 3");
    if (update.epochs <= 0) throw ConfigError("rl.epochs must be positive");
    if (update.batch_size <= 0) throw ConfigError("rl.batch_size must be positive");
    if (update.lookahead <= 0) throw ConfigError("rl.lookahead_T must be positive");
    if (!(update.gamma > 0.0 && update.gamma <= 1.0)) throw ConfigError("rl.gamma must lie in (0, 1]");
    if (!(update.epsilon_clip > 0.0 && update.epsilon_clip < 1.0)) throw ConfigError("rl.epsilon_clip must lie in (0, 1)");
    if (!(lr_actor > 0.0 && lr_critic > 0.0)) throw ConfigError("rl learning rates must be positive");
    if (hidden <= 0) throw ConfigError("rl.hidden must be positive");
    if (!(sigma_init > 0.0)) throw ConfigError("rl.sigma_init must be positive");
    if (!(accel_scale > 0.0 && steer_scale > 0.0)) throw ConfigError("rl action scales must be positive");
    if (!(delta > 0.5 && delta < 1.0)) throw ConfigError("gate.delta must lie in (0.5, 1)");
    if (bootstrap < 100) throw ConfigError("gate.B must be at least 100");
    if (!(max_steps > 0.0)) throw ConfigError("trainer.M must be positive");
    if (eval_episodes < 1 || hybrid_episodes < 1) throw ConfigError("trainer evaluation episode counts must be >= 1");
    if (checkpoint_every < 0 || max_cycles < 0 || wall_budget < 0.0 || export_episodes < 0)
      throw ConfigError("trainer/io counters must be non-negative");
  }
};

namespace detail {

using FieldRef = std::variant<double*, int*, bool*, std::string*, std::optional<double>*, std::optional<int>*,
                              std::optional<std::uint64_t>*, GateMode*>;

struct Field {
  const char* section;
  const char* key;
  FieldRef ref;
};

inline std::vector<Field> fields(TrainerConfig& c) {
  auto& r = c.env.road;
  auto& l = c.env.limits;
  auto& w = c.env.weights;
  auto& so = c.scenario_overrides;
  auto& idm = c.env.rule.idm;
  auto& mob = c.env.rule.mobil;
  auto& st = c.env.rule.steering;
  auto& u = c.update;
  return {
      {"env", "scenario", &c.scenario},
      {"env", "N", &so.episode_steps},
      {"env", "dt", &so.dt},
      {"env", "ego_speed", &so.ego_speed},
      {"env", "lead_distance", &so.lead_distance},
      {"env", "brake_rate", &so.brake_rate},
      {"env", "cut_in_speed", &so.cut_in_speed},
      {"env", "demand", &so.demand},
      {"env", "max_distance", &so.max_distance},
      {"env", "lane_count", &r.lane_count},
      {"env", "lane_width", &r.lane_width},
      {"env", "road_length", &r.road_length},
      {"env", "v_limit", &r.speed_limit},
      {"env", "a_min", &l.accel_min},
      {"env", "a_max", &l.accel_max},
      {"env", "delta_max", &l.steer_max},
      {"env", "actuator_lag", &l.lag_time},
      {"env", "wheelbase", &l.wheelbase},
      {"env", "steer_assist", &c.env.steer_assist},
      {"env", "v_max", &l.max_speed},
      {"env", "omega1", &w.efficiency},
      {"env", "omega2", &w.jerk},
      {"env", "omega3", &w.steer},
      {"env", "omega4", &w.risk_front},
      {"env", "omega5", &w.risk_rear},
      {"env", "omega6", &w.collision},
      {"env", "jerk_threshold", &w.jerk_threshold},
      {"env", "steer_threshold", &w.steer_threshold},
      {"idm", "v0", &idm.desired_speed},
      {"idm", "T_h", &idm.time_headway},
      {"idm", "s0", &idm.min_gap},
      {"idm", "a_max", &idm.max_accel},
      {"idm", "b", &idm.comfort_decel},
      {"idm", "exponent", &idm.exponent},
      {"mobil", "p", &mob.politeness},
      {"mobil", "delta_a_th", &mob.threshold},
      {"mobil", "b_safe", &mob.safe_decel},
      {"mobil", "cooldown", &c.env.rule.lane_change_cooldown},
      {"mobil", "settle_tolerance", &c.env.rule.settle_tolerance},
      {"mobil", "steer_frequency", &st.natural_frequency},
      {"mobil", "steer_damping", &st.damping},
      {"rl", "lr_actor", &c.lr_actor},
      {"rl", "lr_critic", &c.lr_critic},
      {"rl", "gamma", &u.gamma},
      {"rl", "epsilon_clip", &u.epsilon_clip},
      {"rl", "entropy_coef", &u.entropy_coef},
      {"rl", "epochs", &u.epochs},
      {"rl", "batch_size", &u.batch_size},
      {"rl", "lookahead_T", &u.lookahead},
      {"rl", "updates_per_epoch", &u.updates_per_epoch},
      {"rl", "normalize_advantages", &u.normalize_advantages},
      {"rl", "hidden", &c.hidden},
      {"rl", "sigma_init", &c.sigma_init},
      {"rl", "accel_scale", &c.accel_scale},
      {"rl", "steer_scale", &c.steer_scale},
      {"gate", "mode", &c.mode},
      {"gate", "delta", &c.delta},
      {"gate", "B", &c.bootstrap},
      {"gate", "bounds", &c.bounds_rule},
      {"gate", "R_plus", &c.return_upper},
      {"gate", "R_minus", &c.return_lower},
      {"trainer", "M", &c.max_steps},
      {"trainer", "beta", &c.trajectories_per_cycle},
      {"trainer", "seed", &c.seed},
      {"trainer", "eval_episodes", &c.eval_episodes},
      {"trainer", "hybrid", &c.hybrid},
      {"trainer", "E_eval", &c.hybrid_episodes},
      {"trainer", "checkpoint_every", &c.checkpoint_every},
      {"trainer", "max_cycles", &c.max_cycles},
      {"trainer", "wall_budget", &c.wall_budget},
      {"io", "run_name", &c.run_name},
      {"io", "export_episodes", &c.export_episodes},
  };
}

inline std::string dotted(const Field& f) { return std::string(f.section) + "." + f.key; }

template <typename T>
T as(const Json& v, const std::string& name) {
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + name + "': value " + v.dump() + " has the wrong type");
  }
}

inline void assign(const Field& f, const Json& v) {
  const std::string name = dotted(f);
  std::visit(
      [&](auto* p) {
        using P = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GateMode>) {
          *p = parse_gate_mode(as<std::string>(v, name));
        } else if constexpr (std::is_same_v<P, std::optional<double>> || std::is_same_v<P, std::optional<int>> ||
                             std::is_same_v<P, std::optional<std::uint64_t>>) {
          if (v.is_null()) p->reset();
          else *p = as<typename P::value_type>(v, name);
        } else {
          *p = as<P>(v, name);
        }
      },
      f.ref);
}

inline Json value_of(const Field& f) {
  return std::visit(
      [](auto* p) -> Json {
        using P = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GateMode>) {
          return to_string(*p);
        } else if constexpr (std::is_same_v<P, std::optional<double>> || std::is_same_v<P, std::optional<int>> ||
                             std::is_same_v<P, std::optional<std::uint64_t>>) {
          return *p ? Json(**p) : Json(nullptr);
        } else {
          return Json(*p);
        }
      },
      f.ref);
}

}  // namespace detail

/// Applies a JSON document on top of `cfg`. Unknown sections or keys throw
/// ConfigError naming every offending key.
inline void apply_json(TrainerConfig& cfg, const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  auto fs = detail::fields(cfg);
  std::vector<std::string> unknown;
  for (const auto& [section, body] : doc.items()) {
    if (!body.is_object()) {
      unknown.push_back(section);
      continue;
    }
    for (const auto& [key, value] : body.items()) {
      auto it = std::find_if(fs.begin(), fs.end(), [&](const detail::Field& f) { return section == f.section && key == f.key; });
      if (it == fs.end()) unknown.push_back(section + "." + key);
      else detail::assign(*it, value);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
}

/// Applies one "section.key" override whose value is given as text. The text
/// is read as JSON when it parses, otherwise as a plain string.
inline void apply_override(TrainerConfig& cfg, const std::string& dotted_key, const std::string& text) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError("override '" + dotted_key + "': expected section.key");
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json doc;
  doc[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
  apply_json(cfg, doc);
}

/// Full effective configuration. Scenario-dependent fields are filled from
/// the resolved scenario so reloading the output reproduces the run.
inline Json to_json(const TrainerConfig& in) {
  TrainerConfig c = in;
  const auto spec = c.scenario_spec();
  auto& o = c.scenario_overrides;
  o.episode_steps = spec.episode_steps;
  o.dt = spec.dt;
  o.ego_speed = spec.ego_speed;
  o.lead_distance = spec.lead_distance;
  o.brake_rate = spec.brake_rate;
  o.cut_in_speed = spec.cut_in_speed;
  o.demand = spec.demand;
  if (std::isfinite(spec.max_distance)) o.max_distance = spec.max_distance;
  Json doc = Json::object();
  for (const auto& f : detail::fields(c)) doc[f.section][f.key] = detail::value_of(f);
  return doc;
}

inline TrainerConfig from_json(const Json& doc) {
  TrainerConfig c;
  apply_json(c, doc);
  return c;
}

inline TrainerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

/// 64-bit FNV-1a, used to fingerprint the resolved configuration.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const TrainerConfig& c) { return fnv1a(to_json(c).dump()); }

}  // namespace hcpi::trainer
