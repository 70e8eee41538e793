#pragma once

/**
 * @file config.hpp
 * @brief Scenario documents (JSON) and run artifacts (CSV log, metrics JSON).
 *
 * A scenario document has four sections:
 *
 *   model     mass, inertia, com_offset, gravity, chains, s_min, s_max
 *   jets      jet model coefficients and bounds (controller side) plus the
 *             plant perturbation
 *   mpc       horizon, rates, weights, solver settings
 *   scenario  initial state, reference, disturbances, duration, ablation, seed
 *
 * Unknown keys are rejected. Every error is a ConfigError naming the dotted
 * path of the offending entry, e.g. "model.mass".
 */

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sim.hpp"

namespace jetmpc {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Read-only view of one JSON object that tracks which keys were consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(join_path(path_, key), "missing required field");
    used_.push_back(key);
    return j_.at(key);
  }

  double number(const std::string& key) { return as_number(at(key), join_path(path_, key)); }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(join_path(path_, key), "expected an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(join_path(path_, key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(join_path(path_, key), "expected a string");
    return v.get<std::string>();
  }
  Eigen::VectorXd vector(const std::string& key, Eigen::Index size = -1) {
    return as_vector(at(key), join_path(path_, key), size);
  }
  Eigen::Vector3d vec3(const std::string& key, const Eigen::Vector3d& fallback) {
    return has(key) ? Eigen::Vector3d(vector(key, 3)) : fallback;
  }
  Section child(const std::string& key) { return Section(at(key), join_path(path_, key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw ConfigError(join_path(path_, key), "unknown field");
      }
    }
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
  }

  static Eigen::VectorXd as_vector(const Json& v, const std::string& path, Eigen::Index size) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    if (size >= 0 && static_cast<Eigen::Index>(v.size()) != size) {
      throw ConfigError(path, "expected " + std::to_string(size) + " entries, got " +
                                  std::to_string(v.size()));
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = as_number(v[i], path + "." + std::to_string(i));
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string> used_;
};

inline Json to_json_vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::Matrix3d parse_matrix3(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected a 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    m.row(r) = Section::as_vector(v[static_cast<std::size_t>(r)],
                                  path + "." + std::to_string(r), 3).transpose();
  }
  return m;
}

inline Json matrix3_to_json(const Eigen::Matrix3d& m) {
  Json a = Json::array();
  for (int r = 0; r < 3; ++r) a.push_back(to_json_vec(m.row(r).transpose()));
  return a;
}

// {"translation": [3], "rotation": [[3x3]]} or {"translation": [3], "rpy": [3]}.
inline Eigen::Isometry3d parse_transform(Section s) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translation() = s.vec3("translation", Eigen::Vector3d::Zero());
  if (s.has("rotation") && s.has("rpy")) {
    throw ConfigError(s.path(), "give either rotation or rpy, not both");
  }
  if (s.has("rotation")) {
    const Eigen::Matrix3d r = parse_matrix3(s.at("rotation"), join_path(s.path(), "rotation"));
    if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() > 1e-9 || r.determinant() < 0.0) {
      throw ConfigError(join_path(s.path(), "rotation"), "not a rotation matrix");
    }
    t.linear() = r;
  } else if (s.has("rpy")) {
    t.linear() = rotation_from_euler(s.vector("rpy", 3));
  }
  s.finish();
  return t;
}

inline Json transform_to_json(const Eigen::Isometry3d& t) {
  Json j;
  j["translation"] = to_json_vec(t.translation());
  j["rotation"] = matrix3_to_json(t.linear());
  return j;
}

template <typename F>
auto rethrow_as_config(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace detail

// ----------------------------------------------------------------- model

inline RobotModel robot_model_from_json(const Json& j, const std::string& path = "model") {
  detail::Section s(j, path);
  RobotModel m;
  m.mass = s.number("mass");
  m.inertia = detail::parse_matrix3(s.at("inertia"), path + ".inertia");
  m.com_offset = s.vec3("com_offset", Eigen::Vector3d::Zero());
  m.gravity = s.number("gravity", 9.81);
  m.s_min = s.vector("s_min");
  m.s_max = s.vector("s_max");
  m.n_s = static_cast<int>(m.s_min.size());

  const Json& chains = s.at("chains");
  if (!chains.is_array() || chains.empty()) {
    throw ConfigError(path + ".chains", "expected a non-empty array");
  }
  int next_joint = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const std::string cp = path + ".chains." + std::to_string(c);
    detail::Section cs(chains[c], cp);
    KinematicChain chain;
    chain.mount = cs.has("mount") ? detail::parse_transform(cs.child("mount"))
                                  : Eigen::Isometry3d::Identity();
    chain.first_joint = next_joint;
    if (cs.has("joints")) {
      const Json& joints = cs.at("joints");
      if (!joints.is_array()) throw ConfigError(cp + ".joints", "expected an array");
      for (std::size_t k = 0; k < joints.size(); ++k) {
        const std::string jp = cp + ".joints." + std::to_string(k);
        detail::Section js(joints[k], jp);
        Joint joint;
        joint.axis = js.vector("axis", 3);
        if (std::abs(joint.axis.norm() - 1.0) > 1e-9) {
          throw ConfigError(jp + ".axis", "axis must be a unit vector");
        }
        joint.offset = js.has("offset") ? detail::parse_transform(js.child("offset"))
                                        : Eigen::Isometry3d::Identity();
        js.finish();
        chain.joints.push_back(joint);
      }
    }
    cs.finish();
    next_joint += chain.num_joints();
    m.chains.push_back(chain);
  }
  if (next_joint != m.n_s) {
    throw ConfigError(path + ".s_min", "joint limit vectors must have one entry per chain joint (" +
                                           std::to_string(next_joint) + ")");
  }
  s.finish();
  detail::rethrow_as_config(path, [&] {
    m.validate();
    return 0;
  });
  return m;
}

inline Json to_json(const RobotModel& m) {
  Json j;
  j["mass"] = m.mass;
  j["inertia"] = detail::matrix3_to_json(m.inertia);
  j["com_offset"] = detail::to_json_vec(m.com_offset);
  j["gravity"] = m.gravity;
  Json chains = Json::array();
  for (const auto& c : m.chains) {
    Json cj;
    cj["mount"] = detail::transform_to_json(c.mount);
    Json joints = Json::array();
    for (const auto& jt : c.joints) {
      Json jj;
      jj["axis"] = detail::to_json_vec(jt.axis);
      jj["offset"] = detail::transform_to_json(jt.offset);
      joints.push_back(jj);
    }
    cj["joints"] = joints;
    chains.push_back(cj);
  }
  j["chains"] = chains;
  j["s_min"] = detail::to_json_vec(m.s_min);
  j["s_max"] = detail::to_json_vec(m.s_max);
  return j;
}

// ------------------------------------------------------------------ jets

inline JetParams jet_params_from_json(detail::Section& s) {
  JetParams p;
  const Eigen::VectorXd c = s.vector("c", 5);
  const Eigen::VectorXd d = s.vector("d", 3);
  for (int i = 0; i < 5; ++i) p.c[static_cast<std::size_t>(i)] = c[i];
  for (int i = 0; i < 3; ++i) p.d[static_cast<std::size_t>(i)] = d[i];
  p.e0 = s.number("e0", p.e0);
  p.e1 = s.number("e1", p.e1);
  p.t_max = s.number("t_max", p.t_max);
  p.tdot_max = s.number("tdot_max", p.tdot_max);
  p.v_min = s.number("v_min", p.v_min);
  p.v_max = s.number("v_max", p.v_max);
  return p;
}

inline Json jet_params_to_json(const JetParams& p) {
  Json j;
  j["c"] = Json::array({p.c[0], p.c[1], p.c[2], p.c[3], p.c[4]});
  j["d"] = Json::array({p.d[0], p.d[1], p.d[2]});
  j["e0"] = p.e0;
  j["e1"] = p.e1;
  j["t_max"] = p.t_max;
  j["tdot_max"] = p.tdot_max;
  j["v_min"] = p.v_min;
  j["v_max"] = p.v_max;
  return j;
}

// ------------------------------------------------------------------- mpc

inline MpcConfig mpc_config_from_json(const Json& j, const std::string& path = "mpc") {
  detail::Section s(j, path);
  MpcConfig c;
  c.horizon = s.number("horizon", c.horizon);
  c.n_knots = s.integer("n_knots", c.n_knots);
  c.f_mpc = s.number("f_mpc", c.f_mpc);
  c.dt0 = s.number("dt0", 1.0 / c.f_mpc);
  c.variable_timestep = s.boolean("variable_timestep", c.variable_timestep);
  c.f_jet = s.number("f_jet", c.f_jet);
  c.f_joint = s.number("f_joint", c.f_joint);
  if (s.has("weights")) {
    detail::Section w = s.child("weights");
    MpcWeights& mw = c.weights;
    mw.x = w.vec3("x", mw.x);
    mw.h_p = w.vec3("h_p", mw.h_p);
    mw.phi = w.vec3("phi", mw.phi);
    mw.h_w = w.vec3("h_w", mw.h_w);
    mw.du_joint = w.number("du_joint", mw.du_joint);
    mw.du_jet = w.number("du_jet", mw.du_jet);
    mw.du_thrust = w.number("du_thrust", mw.du_thrust);
    mw.e_x = w.vec3("e_x", mw.e_x);
    mw.e_phi = w.vec3("e_phi", mw.e_phi);
    w.finish();
    detail::rethrow_as_config(w.path(), [&] {
      mw.validate();
      return 0;
    });
  }
  if (s.has("solver")) {
    detail::Section q = s.child("solver");
    SolverSettings& ss = c.solver;
    ss.rho = q.number("rho", ss.rho);
    ss.sigma = q.number("sigma", ss.sigma);
    ss.alpha = q.number("alpha", ss.alpha);
    ss.eps_abs = q.number("eps_abs", ss.eps_abs);
    ss.eps_rel = q.number("eps_rel", ss.eps_rel);
    ss.max_iter = q.integer("max_iter", ss.max_iter);
    ss.warm_start = q.boolean("warm_start", ss.warm_start);
    ss.scaling_iterations = q.integer("scaling_iterations", ss.scaling_iterations);
    ss.polish = q.boolean("polish", ss.polish);
    ss.check_interval = q.integer("check_interval", ss.check_interval);
    ss.eps_infeasible = q.number("eps_infeasible", ss.eps_infeasible);
    ss.rho_equality_scale = q.number("rho_equality_scale", ss.rho_equality_scale);
    ss.polish_tolerance = q.number("polish_tolerance", ss.polish_tolerance);
    ss.polish_retry_interval = q.integer("polish_retry_interval", ss.polish_retry_interval);
    ss.adaptive_rho = q.boolean("adaptive_rho", ss.adaptive_rho);
    ss.adaptive_rho_interval = q.integer("adaptive_rho_interval", ss.adaptive_rho_interval);
    ss.adaptive_rho_tolerance = q.number("adaptive_rho_tolerance", ss.adaptive_rho_tolerance);
    q.finish();
    detail::rethrow_as_config(q.path(), [&] {
      ss.validate();
      return 0;
    });
  }
  s.finish();
  detail::rethrow_as_config(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

inline Json to_json(const MpcConfig& c) {
  Json j;
  j["horizon"] = c.horizon;
  j["n_knots"] = c.n_knots;
  j["dt0"] = c.dt0;
  j["variable_timestep"] = c.variable_timestep;
  j["f_mpc"] = c.f_mpc;
  j["f_jet"] = c.f_jet;
  j["f_joint"] = c.f_joint;
  const MpcWeights& w = c.weights;
  j["weights"] = {{"x", detail::to_json_vec(w.x)},         {"h_p", detail::to_json_vec(w.h_p)},
                  {"phi", detail::to_json_vec(w.phi)},     {"h_w", detail::to_json_vec(w.h_w)},
                  {"du_joint", w.du_joint},                {"du_jet", w.du_jet},
                  {"du_thrust", w.du_thrust},              {"e_x", detail::to_json_vec(w.e_x)},
                  {"e_phi", detail::to_json_vec(w.e_phi)}};
  const SolverSettings& s = c.solver;
  j["solver"] = {{"rho", s.rho},
                 {"sigma", s.sigma},
                 {"alpha", s.alpha},
                 {"eps_abs", s.eps_abs},
                 {"eps_rel", s.eps_rel},
                 {"max_iter", s.max_iter},
                 {"warm_start", s.warm_start},
                 {"scaling_iterations", s.scaling_iterations},
                 {"polish", s.polish},
                 {"check_interval", s.check_interval},
                 {"eps_infeasible", s.eps_infeasible},
                 {"rho_equality_scale", s.rho_equality_scale},
                 {"polish_tolerance", s.polish_tolerance},
                 {"polish_retry_interval", s.polish_retry_interval},
                 {"adaptive_rho", s.adaptive_rho},
                 {"adaptive_rho_interval", s.adaptive_rho_interval},
                 {"adaptive_rho_tolerance", s.adaptive_rho_tolerance}};
  return j;
}

// -------------------------------------------------------------- scenario

inline Scenario scenario_from_json(const Json& doc) {
  detail::Section root(doc, "");
  Scenario sc;
  sc.model = robot_model_from_json(root.at("model"), "model");
  const int n_j = sc.model.num_jets();
  const int n_s = sc.model.n_s;

  if (root.has("jets")) {
    detail::Section js = root.child("jets");
    sc.jets = jet_params_from_json(js);
    sc.plant_jet_speed = js.number("plant_speed", sc.plant_jet_speed);
    sc.ideal_plant_jets = js.boolean("ideal_plant", sc.ideal_plant_jets);
    if (js.has("fl_gains")) {
      detail::Section g = js.child("fl_gains");
      sc.fl_gains.k_p = g.number("k_p", sc.fl_gains.k_p);
      sc.fl_gains.k_d = g.number("k_d", sc.fl_gains.k_d);
      g.finish();
    }
    js.finish();
    detail::rethrow_as_config("jets", [&] {
      sc.jets.validate();
      return 0;
    });
    if (!(sc.plant_jet_speed > 0.0)) throw ConfigError("jets.plant_speed", "must be positive");
  }
  if (root.has("mpc")) sc.mpc = mpc_config_from_json(root.at("mpc"), "mpc");

  detail::Section s = root.child("scenario");
  sc.name = s.string("name", sc.name);
  sc.duration = s.number("duration", sc.duration);
  sc.f_sim = s.number("f_sim", sc.f_sim);
  sc.joint_servo_tau = s.number("joint_servo_tau", sc.joint_servo_tau);
  sc.ablation = detail::rethrow_as_config("scenario.ablation", [&] {
    return ablation_from_string(s.string("ablation", to_string(sc.ablation)));
  });
  if (s.has("seed")) {
    const Json& v = s.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("scenario.seed", "expected a non-negative integer");
    }
    sc.seed = v.get<std::uint64_t>();
  }

  sc.initial = State();
  if (s.has("initial")) {
    detail::Section in = s.child("initial");
    sc.initial.x = in.vec3("x", sc.initial.x);
    sc.initial.h_p = in.vec3("h_p", sc.initial.h_p);
    sc.initial.phi = in.vec3("phi", sc.initial.phi);
    sc.initial.h_w = in.vec3("h_w", sc.initial.h_w);
    if (in.has("thrust")) sc.initial.thrust = in.vector("thrust", n_j);
    if (in.has("thrust_rate")) sc.initial.thrust_rate = in.vector("thrust_rate", n_j);
    if (in.has("joints")) sc.initial_joints = in.vector("joints", n_s);
    in.finish();
  }

  if (s.has("reference")) {
    detail::Section r = s.child("reference");
    const std::string type = r.string("type", "hover");
    if (type == "hover") {
      HoverReference h;
      h.x = r.vec3("x", h.x);
      h.phi = r.vec3("phi", h.phi);
      sc.reference = h;
    } else if (type == "min_jerk") {
      MinJerkReference mj;
      mj.phi = r.vec3("phi", mj.phi);
      const Json& wps = r.at("waypoints");
      if (!wps.is_array()) throw ConfigError("scenario.reference.waypoints", "expected an array");
      for (std::size_t i = 0; i < wps.size(); ++i) {
        detail::Section w(wps[i], "scenario.reference.waypoints." + std::to_string(i));
        mj.waypoints.push_back(Waypoint{w.number("t"), w.vector("x", 3)});
        w.finish();
      }
      detail::rethrow_as_config("scenario.reference.waypoints", [&] {
        MinJerkTrajectory check(mj.waypoints);
        return 0;
      });
      sc.reference = mj;
    } else {
      throw ConfigError("scenario.reference.type", "expected hover or min_jerk, got '" + type + "'");
    }
    r.finish();
  }

  if (s.has("disturbances")) {
    const Json& ds = s.at("disturbances");
    if (!ds.is_array()) throw ConfigError("scenario.disturbances", "expected an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      detail::Section d(ds[i], "scenario.disturbances." + std::to_string(i));
      Disturbance dist;
      dist.t_start = d.number("t_start");
      dist.duration = d.number("duration");
      dist.wrench.force = d.vec3("force", Eigen::Vector3d::Zero());
      dist.wrench.torque = d.vec3("torque", Eigen::Vector3d::Zero());
      d.finish();
      sc.disturbances.push_back(dist);
    }
  }
  sc.disturbance_scale = s.number("disturbance_scale", sc.disturbance_scale);

  if (s.has("metrics_window")) {
    detail::Section w = s.child("metrics_window");
    sc.metrics_window.start = w.number("start", 0.0);
    if (w.has("end")) sc.metrics_window.end = w.number("end");
    w.finish();
  }
  s.finish();
  root.finish();
  detail::rethrow_as_config("scenario", [&] {
    sc.validate();
    return 0;
  });
  return sc;
}

inline Json to_json(const Scenario& sc) {
  Json doc;
  doc["model"] = to_json(sc.model);
  Json jets = jet_params_to_json(sc.jets);
  jets["plant_speed"] = sc.plant_jet_speed;
  jets["ideal_plant"] = sc.ideal_plant_jets;
  jets["fl_gains"] = {{"k_p", sc.fl_gains.k_p}, {"k_d", sc.fl_gains.k_d}};
  doc["jets"] = jets;
  doc["mpc"] = to_json(sc.mpc);

  Json s;
  s["name"] = sc.name;
  s["duration"] = sc.duration;
  s["f_sim"] = sc.f_sim;
  s["joint_servo_tau"] = sc.joint_servo_tau;
  s["ablation"] = to_string(sc.ablation);
  s["seed"] = sc.seed;
  Json in;
  in["x"] = detail::to_json_vec(sc.initial.x);
  in["h_p"] = detail::to_json_vec(sc.initial.h_p);
  in["phi"] = detail::to_json_vec(sc.initial.phi);
  in["h_w"] = detail::to_json_vec(sc.initial.h_w);
  if (sc.initial.thrust.size() > 0) in["thrust"] = detail::to_json_vec(sc.initial.thrust);
  if (sc.initial.thrust.size() > 0 && sc.initial.thrust_rate.size() > 0) {
    in["thrust_rate"] = detail::to_json_vec(sc.initial.thrust_rate);
  }
  if (sc.initial_joints.size() > 0) in["joints"] = detail::to_json_vec(sc.initial_joints);
  s["initial"] = in;

  if (const auto* h = std::get_if<HoverReference>(&sc.reference)) {
    s["reference"] = {{"type", "hover"},
                      {"x", detail::to_json_vec(h->x)},
                      {"phi", detail::to_json_vec(h->phi)}};
  } else {
    const auto& mj = std::get<MinJerkReference>(sc.reference);
    Json wps = Json::array();
    for (const auto& w : mj.waypoints) wps.push_back({{"t", w.t}, {"x", detail::to_json_vec(w.x)}});
    s["reference"] = {{"type", "min_jerk"}, {"phi", detail::to_json_vec(mj.phi)}, {"waypoints", wps}};
  }
  Json ds = Json::array();
  for (const auto& d : sc.disturbances) {
    ds.push_back({{"t_start", d.t_start},
                  {"duration", d.duration},
                  {"force", detail::to_json_vec(d.wrench.force)},
                  {"torque", detail::to_json_vec(d.wrench.torque)}});
  }
  s["disturbances"] = ds;
  s["disturbance_scale"] = sc.disturbance_scale;
  Json win;
  win["start"] = sc.metrics_window.start;
  if (sc.metrics_window.end) win["end"] = *sc.metrics_window.end;
  s["metrics_window"] = win;
  doc["scenario"] = s;
  return doc;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(origin, std::string("malformed JSON: ") + e.what());
  }
}

inline Json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), file.string());
}

/**
 * Apply "a.b.c=value" overrides. The path must already exist in `doc`
 * (array elements are addressed by index). The value is parsed as JSON and
 * falls back to a plain string.
 */
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must have the form path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const std::size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (node->is_object()) {
      if (!node->contains(key)) throw ConfigError(path, "unknown configuration path");
      node = &(*node)[key];
    } else if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ConfigError(path, "expected an array index, got '" + key + "'");
      }
      if (idx >= node->size()) throw ConfigError(path, "array index out of range");
      node = &(*node)[idx];
    } else {
      throw ConfigError(path, "cannot descend into a scalar");
    }
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  *node = value;
}

/// Parse, fill defaults, apply overrides on the resolved document, re-parse.
inline Scenario load_scenario(const Json& doc, const std::vector<std::string>& overrides = {}) {
  Scenario sc = scenario_from_json(doc);
  if (overrides.empty()) return sc;
  Json resolved = to_json(sc);
  for (const auto& o : overrides) apply_override(resolved, o);
  return scenario_from_json(resolved);
}

// ------------------------------------------------------------- artifacts

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out += buf;
}

}  // namespace detail

inline std::string log_csv_header(int n_j, int n_s) {
  std::string h = "t,x,y,z,hp_x,hp_y,hp_z,roll,pitch,yaw,hw_x,hw_y,hw_z";
  for (int i = 0; i < n_j; ++i) h += ",T" + std::to_string(i);
  for (int i = 0; i < n_j; ++i) h += ",Tdot" + std::to_string(i);
  for (int i = 0; i < n_s; ++i) h += ",s" + std::to_string(i);
  for (int i = 0; i < n_s; ++i) h += ",s_cmd" + std::to_string(i);
  for (int i = 0; i < n_j; ++i) h += ",v_cmd" + std::to_string(i);
  h += ",x_ref,y_ref,z_ref,roll_ref,pitch_ref,yaw_ref";
  h += ",qp_iterations,qp_primal_res,qp_dual_res,qp_cost,degraded,jet_updated,hold_active,disturbance";
  return h;
}

/// One row per record. Wall-clock quantities are excluded so that identical
/// runs produce identical files.
inline void write_log_csv(std::ostream& out, const std::vector<LogRecord>& log, int n_j, int n_s) {
  out << log_csv_header(n_j, n_s) << '\n';
  std::string row;
  for (const auto& r : log) {
    row.clear();
    auto add = [&](double v) {
      if (!row.empty()) row += ',';
      detail::append_number(row, v);
    };
    auto add_vec = [&](const Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
    };
    add(r.t);
    add_vec(r.state.x);
    add_vec(r.state.h_p);
    add_vec(r.state.phi);
    add_vec(r.state.h_w);
    add_vec(r.state.thrust);
    add_vec(r.state.thrust_rate);
    add_vec(r.s);
    add_vec(r.s_cmd);
    add_vec(r.v_cmd);
    add_vec(r.x_ref);
    add_vec(r.phi_ref);
    add(r.mpc.iterations);
    add(r.mpc.primal_res);
    add(r.mpc.dual_res);
    add(r.mpc.cost);
    add(r.mpc.degraded ? 1 : 0);
    add(r.mpc.jet_updated ? 1 : 0);
    add(r.mpc.hold_active ? 1 : 0);
    add(r.disturbance_active ? 1 : 0);
    out << row << '\n';
  }
}

/// Per-controller-iteration diagnostics including wall-clock solve time.
inline void write_mpc_csv(std::ostream& out, const std::vector<MpcStepRecord>& steps) {
  out << "t,solve_time_ms,iterations,primal_res,dual_res,cost,status,degraded,jet_updated,"
         "hold_active,hold_error\n";
  std::string row;
  for (const auto& s : steps) {
    const auto& d = s.diagnostics;
    row.clear();
    auto add = [&](double v) {
      if (!row.empty()) row += ',';
      detail::append_number(row, v);
    };
    add(s.t);
    add(d.solve_time_ms);
    add(d.iterations);
    add(d.primal_res);
    add(d.dual_res);
    add(d.cost);
    row += ',';
    row += to_string(d.status);
    add(d.degraded ? 1 : 0);
    add(d.jet_updated ? 1 : 0);
    add(d.hold_active ? 1 : 0);
    add(d.hold_error);
    out << row << '\n';
  }
}

inline Json to_json(const Metrics& m) {
  Json j;
  j["status"] = m.status;
  j["crash_reason"] = m.crash_reason;
  j["crash_time"] = m.crash_time;
  j["window"] = {{"start", m.window_start}, {"end", m.window_end}};
  j["mae"] = {{"x", m.mae_x[0]},        {"y", m.mae_x[1]},         {"z", m.mae_x[2]},
              {"roll", m.mae_phi[0]},   {"pitch", m.mae_phi[1]},   {"yaw", m.mae_phi[2]}};
  j["max_abs_error"] = {{"x", m.max_abs_x[0]},      {"y", m.max_abs_x[1]},
                        {"z", m.max_abs_x[2]},      {"roll", m.max_abs_phi[0]},
                        {"pitch", m.max_abs_phi[1]}, {"yaw", m.max_abs_phi[2]}};
  j["max_position_error"] = m.max_position_error;
  j["max_attitude_error"] = m.max_attitude_error;
  j["recovery_times"] = m.recovery_times;
  j["solve_time_ms"] = {{"mean", m.solve_time.mean_ms},
                        {"max", m.solve_time.max_ms},
                        {"stdev", m.solve_time.stdev_ms},
                        {"p99", m.solve_time.p99_ms}};
  j["mean_qp_iterations"] = m.mean_qp_iterations;
  j["max_primal_res"] = m.max_primal_res;
  j["max_dual_res"] = m.max_dual_res;
  j["max_hold_error"] = m.max_hold_error;
  j["degraded_steps"] = m.degraded_steps;
  j["mpc_steps"] = m.mpc_steps;
  return j;
}

inline std::string summary_text(const Scenario& sc, const Metrics& m) {
  std::ostringstream o;
  char buf[256];
  o << "scenario   " << sc.name << " (" << to_string(sc.ablation) << ", seed " << sc.seed << ")\n";
  o << "status     " << m.status;
  if (m.status != "completed") o << " at t=" << m.crash_time << " s: " << m.crash_reason;
  o << '\n';
  std::snprintf(buf, sizeof(buf), "MAE pos    x %.4f  y %.4f  z %.4f m\n", m.mae_x[0], m.mae_x[1],
                m.mae_x[2]);
  o << buf;
  std::snprintf(buf, sizeof(buf), "MAE att    roll %.4f  pitch %.4f  yaw %.4f rad\n", m.mae_phi[0],
                m.mae_phi[1], m.mae_phi[2]);
  o << buf;
  std::snprintf(buf, sizeof(buf), "max error  position %.4f m, attitude %.4f rad\n",
                m.max_position_error, m.max_attitude_error);
  o << buf;
  for (std::size_t i = 0; i < m.recovery_times.size(); ++i) {
    if (m.recovery_times[i] < 0.0) {
      o << "recovery   disturbance " << i << ": not recovered\n";
    } else {
      std::snprintf(buf, sizeof(buf), "recovery   disturbance %zu: %.3f s after end\n", i,
                    m.recovery_times[i]);
      o << buf;
    }
  }
  std::snprintf(buf, sizeof(buf),
                "solve time mean %.3f  p99 %.3f  max %.3f ms  (%d steps, %.1f iterations, %d degraded)\n",
                m.solve_time.mean_ms, m.solve_time.p99_ms, m.solve_time.max_ms, m.mpc_steps,
                m.mean_qp_iterations, m.degraded_steps);
  o << buf;
  return o.str();
}

/// Writes config.json, log.csv, mpc.csv, metrics.json and summary.txt into `dir`.
inline void write_run_directory(const std::filesystem::path& dir, const Scenario& sc,
                                const SimulationResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("config.json");
    f << to_json(sc).dump(2) << '\n';
  }
  {
    auto f = open("log.csv");
    write_log_csv(f, result.log, sc.model.num_jets(), sc.model.n_s);
  }
  {
    auto f = open("mpc.csv");
    write_mpc_csv(f, result.mpc_steps);
  }
  {
    auto f = open("metrics.json");
    Json m = to_json(result.metrics);
    m["scenario"] = sc.name;
    m["ablation"] = to_string(sc.ablation);
    m["seed"] = sc.seed;
    f << m.dump(2) << '\n';
  }
  {
    auto f = open("summary.txt");
    f << summary_text(sc, result.metrics);
  }
}

}  // namespace jetmpc
