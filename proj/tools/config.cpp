#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "contact_kam/expression.hpp"
#include "contact_kam/io.hpp"

namespace contact_kam::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(std::string("'") + key + "' must be finite");
  return d;
}

double positive(const json& obj, const char* key, double fallback) {
  const double d = number(obj, key, fallback);
  if (!(d > 0.0)) throw ConfigError(std::string("'") + key + "' must be positive");
  return d;
}

std::size_t count(const json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError(std::string("'") + key + "' must be a positive integer");
  return v.get<std::size_t>();
}

std::string text(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

Expression expression(const json& obj, const char* key, const std::string& fallback, bool x_only) {
  const std::string src = text(obj, key, fallback);
  Expression e;
  try {
    e = parse_expression(src);
  } catch (const ParseError& ex) {
    throw ConfigError(std::string("model.") + key + ": " + ex.what());
  }
  if (x_only && (e.depends_on(Var::U) || e.depends_on(Var::P)))
    throw ConfigError(std::string("model.") + key + " may depend on x only");
  return e;
}

ContactModel build_model(const json& m, double v_max, std::string& kind) {
  if (!m.is_object()) throw ConfigError("'model' must be an object");
  reject_unknown(m, {"kind", "alpha", "V", "lambda", "H", "v_max", "bounds"}, "model");
  kind = text(m, "kind", "example63");
  v_max = positive(m, "v_max", v_max);
  ModelBounds b;
  if (m.contains("bounds")) {
    const json& bj = m.at("bounds");
    if (!bj.is_object()) throw ConfigError("'model.bounds' must be an object");
    reject_unknown(bj, {"u_min", "u_max", "p_min", "p_max"}, "model.bounds");
    b.u_min = number(bj, "u_min", b.u_min);
    b.u_max = number(bj, "u_max", b.u_max);
    b.p_min = number(bj, "p_min", b.p_min);
    b.p_max = number(bj, "p_max", b.p_max);
    if (!(b.u_min < b.u_max) || !(b.p_min < b.p_max)) throw ConfigError("model.bounds must be increasing intervals");
  }
  try {
    if (kind == "example63") {
      for (const char* k : {"alpha", "V", "lambda", "H"})
        if (m.contains(k)) throw ConfigError(std::string("model.") + k + " is fixed for kind example63");
      return ContactModel::example63(v_max);
    }
    if (kind == "separable") {
      if (m.contains("H")) throw ConfigError("model.H belongs to kind general");
      return ContactModel::separable(positive(m, "alpha", 1.0), expression(m, "V", "0", true), expression(m, "lambda", "0", true), v_max,
                                     b);
    }
    if (kind == "general") {
      for (const char* k : {"alpha", "V", "lambda"})
        if (m.contains(k)) throw ConfigError(std::string("model.") + k + " belongs to kind separable");
      if (!m.contains("H")) throw ConfigError("model.H is required for kind general");
      return ContactModel::general(expression(m, "H", "", false), v_max, b);
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model evaluation failed: ") + e.what());
  }
  throw ConfigError("model.kind must be example63, separable or general");
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& source, const std::filesystem::path& origin) {
  RunConfig c;
  c.path = origin;
  c.text = source;
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"model", "grid", "numerics", "out"}, "config");

  json num = j.value("numerics", json::object());
  if (!num.is_object()) throw ConfigError("'numerics' must be an object");
  reject_unknown(num, {"tau", "v_max", "u_clip", "tol", "t_max", "window", "char_tol", "class_tol", "accept_tol", "seed", "h", "thin",
                       "svg", "u_update", "l_point", "manifold_offset", "evidence_span", "classify_high", "classify_low",
                       "pair_count", "verify_n", "verify_trials"},
                 "numerics");
  Numerics& n = c.num;
  n.lax.tau = positive(num, "tau", n.lax.tau);
  n.lax.v_max = positive(num, "v_max", n.lax.v_max);
  n.lax.u_clip = positive(num, "u_clip", n.lax.u_clip);
  n.tol = positive(num, "tol", n.tol);
  n.t_max = positive(num, "t_max", n.t_max);
  n.window = positive(num, "window", n.window);
  if (num.contains("char_tol")) n.char_tol = positive(num, "char_tol", 0.0);
  n.class_tol = positive(num, "class_tol", n.class_tol);
  n.accept_tol = positive(num, "accept_tol", n.accept_tol);
  n.h = positive(num, "h", n.h);
  n.thin = count(num, "thin", n.thin);
  n.manifold_offset = positive(num, "manifold_offset", n.manifold_offset);
  n.evidence_span = positive(num, "evidence_span", n.evidence_span);
  n.classify_high = number(num, "classify_high", n.classify_high);
  n.classify_low = number(num, "classify_low", n.classify_low);
  n.pair_count = count(num, "pair_count", n.pair_count);
  n.verify_n = count(num, "verify_n", n.verify_n);
  n.verify_trials = count(num, "verify_trials", n.verify_trials);
  if (num.contains("seed")) {
    if (!num.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    n.seed = num.at("seed").get<std::uint64_t>();
  }
  if (num.contains("svg")) {
    if (!num.at("svg").is_boolean()) throw ConfigError("'svg' must be true or false");
    n.svg = num.at("svg").get<bool>();
  }
  const std::string uu = text(num, "u_update", "heun");
  if (uu == "heun") n.lax.u_update = UUpdate::Heun;
  else if (uu == "explicit") n.lax.u_update = UUpdate::Explicit;
  else throw ConfigError("'u_update' must be heun or explicit");
  const std::string lp = text(num, "l_point", "midpoint");
  if (lp == "midpoint") n.lax.l_point = LagrangianPoint::Midpoint;
  else if (lp == "arrival") n.lax.l_point = LagrangianPoint::Arrival;
  else throw ConfigError("'l_point' must be midpoint or arrival");

  json grid = j.value("grid", json::object());
  if (!grid.is_object()) throw ConfigError("'grid' must be an object");
  reject_unknown(grid, {"n"}, "grid");
  c.n = count(grid, "n", c.n);
  if (c.n < 16 || c.n % 2 != 0) throw ConfigError("grid.n must be even and at least 16");
  if (n.verify_n < 16 || n.verify_n % 2 != 0) throw ConfigError("verify_n must be even and at least 16");

  c.model = build_model(j.value("model", json::object()), n.lax.v_max, c.model_kind);
  c.out = text(j, "out", c.out.string());
  if (c.out.empty()) throw ConfigError("'out' must not be empty");

  const double Lambda = c.model->lambda_bound();
  if (n.lax.tau * Lambda > 0.5) {
    const double old = n.lax.tau;
    while (n.lax.tau * Lambda > 0.5) n.lax.tau *= 0.5;
    c.notices.push_back("tau reduced from " + fmt_double(old) + " to " + fmt_double(n.lax.tau) + " so that tau*Lambda <= 1/2 (Lambda = " +
                        fmt_double(Lambda) + ")");
  }
  for (const auto& w : c.model->warnings()) c.notices.push_back("model: " + w);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace contact_kam::cli
