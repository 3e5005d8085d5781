#include "eqp/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "eqp/errors.hpp"
#include "eqp/map_families.hpp"

namespace eqp {

namespace {

std::string escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Walks one JSON object, remembering the pointer and which keys were read.
class Reader {
 public:
  Reader(const Json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) throw ConfigError(ptr_.empty() ? "/" : ptr_, "expected an object");
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + escape(key); }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, std::string& v) {
    if (const Json* x = get(key)) {
      if (!x->is_string()) throw ConfigError(at(key), "expected a string");
      v = x->get<std::string>();
    }
  }
  void read(const std::string& key, double& v) {
    if (const Json* x = get(key)) v = number(*x, at(key));
  }
  void read(const std::string& key, std::optional<double>& v) {
    if (const Json* x = get(key)) v = number(*x, at(key));
  }
  void read(const std::string& key, bool& v) {
    if (const Json* x = get(key)) {
      if (!x->is_boolean()) throw ConfigError(at(key), "expected a boolean");
      v = x->get<bool>();
    }
  }
  template <class Int>
  void read_int(const std::string& key, Int& v, long long lo) {
    if (const Json* x = get(key)) v = static_cast<Int>(integer(*x, at(key), lo));
  }
  void read(const std::string& key, std::vector<double>& v) {
    if (const Json* x = get(key)) {
      if (!x->is_array()) throw ConfigError(at(key), "expected an array");
      v.clear();
      for (std::size_t i = 0; i < x->size(); ++i) {
        v.push_back(number((*x)[i], at(key) + "/" + std::to_string(i)));
      }
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

  static double number(const Json& x, const std::string& ptr) {
    if (!x.is_number()) throw ConfigError(ptr, "expected a number");
    return x.get<double>();
  }
  static long long integer(const Json& x, const std::string& ptr, long long lo) {
    if (!x.is_number_integer()) throw ConfigError(ptr, "expected an integer");
    const long long v = x.get<long long>();
    if (v < lo) throw ConfigError(ptr, "must be >= " + std::to_string(lo));
    return v;
  }

 private:
  const Json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

const std::set<std::string> kExperiments{"simulate", "lln", "clt", "spectral", "metric-selftest"};
const std::set<std::string> kKinds{"iid", "markov", "rotation", "deterministic"};

void check_probe(const std::string& v, const std::string& ptr) {
  if (v == "mixed" || v == "random") return;
  if (v.rfind("basis", 0) == 0 && v.size() > 5 &&
      v.find_first_not_of("0123456789", 5) == std::string::npos) {
    return;
  }
  throw ConfigError(ptr, "probe must be mixed, random or basis<i>");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  Reader top(j, "");
  top.read("experiment", c.experiment);
  if (!kExperiments.count(c.experiment)) {
    throw ConfigError("/experiment", "unknown experiment '" + c.experiment + "'");
  }
  if (const Json* d = top.get("driver")) {
    Reader r(*d, "/driver");
    r.read("kind", c.driver.kind);
    if (!kKinds.count(c.driver.kind)) {
      throw ConfigError("/driver/kind", "unknown driver kind '" + c.driver.kind + "'");
    }
    if (const Json* m = r.get("maps")) {
      if (!m->is_array() || m->empty()) throw ConfigError("/driver/maps", "expected a non-empty array");
      c.driver.maps.clear();
      for (std::size_t i = 0; i < m->size(); ++i) {
        const std::string ptr = "/driver/maps/" + std::to_string(i);
        if (!(*m)[i].is_string()) throw ConfigError(ptr, "expected a string");
        c.driver.maps.push_back((*m)[i].get<std::string>());
        try {
          maps::parse(c.driver.maps.back());
        } catch (const UsageError& e) {
          throw ConfigError(ptr, e.what());
        }
      }
    }
    r.read("probs", c.driver.probs);
    if (const Json* t = r.get("transition")) {
      if (!t->is_array()) throw ConfigError("/driver/transition", "expected an array of rows");
      c.driver.transition.clear();
      for (std::size_t i = 0; i < t->size(); ++i) {
        const std::string ptr = "/driver/transition/" + std::to_string(i);
        if (!(*t)[i].is_array()) throw ConfigError(ptr, "expected an array");
        std::vector<double> row;
        for (std::size_t k = 0; k < (*t)[i].size(); ++k) {
          row.push_back(Reader::number((*t)[i][k], ptr + "/" + std::to_string(k)));
        }
        c.driver.transition.push_back(std::move(row));
      }
    }
    r.read("beta", c.driver.beta);
    r.read("arcs", c.driver.arcs);
    r.read_int("index", c.driver.index, 0);
    r.finish();
  }
  top.read_int("n", c.n, 1);
  top.read_int("n_replicas", c.n_replicas, 1);
  if (const Json* s = top.get("seeds")) {
    if (!s->is_array() || s->empty()) throw ConfigError("/seeds", "expected a non-empty array");
    c.seeds.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      const std::string ptr = "/seeds/" + std::to_string(i);
      if (!(*s)[i].is_number_unsigned()) throw ConfigError(ptr, "expected a non-negative integer");
      c.seeds.push_back((*s)[i].get<std::uint64_t>());
    }
  }
  if (const Json* p = top.get("probes")) {
    Reader r(*p, "/probes");
    r.read("x", c.probes.x);
    r.read("y", c.probes.y);
    r.read_int("pairs", c.probes.pairs, 0);
    check_probe(c.probes.x, "/probes/x");
    check_probe(c.probes.y, "/probes/y");
    r.finish();
  }
  if (const Json* t = top.get("tolerances")) {
    Reader r(*t, "/tolerances");
    r.read("ks_alpha", c.tolerances.ks_alpha);
    r.read("sigma_rel", c.tolerances.sigma_rel);
    r.read("perron", c.tolerances.perron);
    r.read("metric", c.tolerances.metric);
    r.read("axioms", c.tolerances.axioms);
    r.read("telescoping", c.tolerances.telescoping);
    r.read("kappa_rel", c.tolerances.kappa_rel);
    r.read("sigma2_ref", c.tolerances.sigma2_ref);
    r.read("kappa_ref", c.tolerances.kappa_ref);
    r.finish();
  }
  if (const Json* p = top.get("params")) {
    Reader r(*p, "/params");
    if (const Json* g = r.get("n_grid")) {
      if (!g->is_array()) throw ConfigError("/params/n_grid", "expected an array");
      for (std::size_t i = 0; i < g->size(); ++i) {
        c.params.n_grid.push_back(
            Reader::integer((*g)[i], "/params/n_grid/" + std::to_string(i), 1));
      }
    }
    r.read_int("horizon", c.params.horizon, 1);
    r.read("r", c.params.r);
    if (c.params.r && !(*c.params.r > 0.0 && *c.params.r < 1.0)) {
      throw ConfigError("/params/r", "must lie in (0, 1)");
    }
    r.read("p", c.params.p);
    if (!(c.params.p >= 2.0)) throw ConfigError("/params/p", "must be >= 2");
    r.read_int("k_max", c.params.k_max, 0);
    r.read_int("mc_inner", c.params.mc_inner, 2);
    r.read_int("outer", c.params.outer, 2);
    r.read_int("batch_length", c.params.batch_length, 0);
    r.read_int("l_replicas", c.params.l_replicas, 1);
    r.read("alpha", c.params.alpha);
    if (c.params.alpha && !(*c.params.alpha > 0.0 && *c.params.alpha <= 1.0)) {
      throw ConfigError("/params/alpha", "must lie in (0, 1]");
    }
    r.read("override_gate", c.params.override_gate);
    r.finish();
  }
  top.read("output", c.output);
  top.finish();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("/", "cannot read config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

Json config_to_json(const ExperimentConfig& c) {
  Json d = {{"kind", c.driver.kind},   {"maps", c.driver.maps},   {"probs", c.driver.probs},
            {"transition", c.driver.transition}, {"beta", c.driver.beta},
            {"arcs", c.driver.arcs}, {"index", c.driver.index}};
  Json tol = {{"ks_alpha", c.tolerances.ks_alpha},   {"sigma_rel", c.tolerances.sigma_rel},
              {"perron", c.tolerances.perron},       {"metric", c.tolerances.metric},
              {"axioms", c.tolerances.axioms},       {"telescoping", c.tolerances.telescoping},
              {"kappa_rel", c.tolerances.kappa_rel}};
  if (c.tolerances.sigma2_ref) tol["sigma2_ref"] = *c.tolerances.sigma2_ref;
  if (c.tolerances.kappa_ref) tol["kappa_ref"] = *c.tolerances.kappa_ref;
  Json par = {{"n_grid", c.params.n_grid},     {"horizon", c.params.horizon},
              {"p", c.params.p},               {"k_max", c.params.k_max},
              {"mc_inner", c.params.mc_inner}, {"outer", c.params.outer},
              {"batch_length", c.params.batch_length},
              {"l_replicas", c.params.l_replicas},
              {"override_gate", c.params.override_gate}};
  if (c.params.r) par["r"] = *c.params.r;
  if (c.params.alpha) par["alpha"] = *c.params.alpha;
  return {{"experiment", c.experiment},
          {"driver", d},
          {"n", c.n},
          {"n_replicas", c.n_replicas},
          {"seeds", c.seeds},
          {"probes", {{"x", c.probes.x}, {"y", c.probes.y}, {"pairs", c.probes.pairs}}},
          {"tolerances", tol},
          {"params", par},
          {"output", c.output}};
}

Driver build_driver(const DriverSpec& spec, std::uint64_t seed) {
  std::vector<PositiveMap> table;
  for (std::size_t i = 0; i < spec.maps.size(); ++i) {
    try {
      table.push_back(maps::parse(spec.maps[i]));
    } catch (const UsageError& e) {
      throw ConfigError("/driver/maps/" + std::to_string(i), e.what());
    }
  }
  try {
    if (spec.kind == "iid") {
      std::vector<double> probs = spec.probs;
      if (probs.empty()) probs.assign(table.size(), 1.0 / static_cast<double>(table.size()));
      return Driver::iid(std::move(table), std::move(probs), seed);
    }
    if (spec.kind == "markov") {
      const auto n = static_cast<Eigen::Index>(spec.transition.size());
      RMatrix p(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = spec.transition[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != n) {
          throw ConfigError("/driver/transition/" + std::to_string(i), "row length mismatch");
        }
        for (Eigen::Index k = 0; k < n; ++k) p(i, k) = row[static_cast<std::size_t>(k)];
      }
      return Driver::markov(std::move(table), p, seed);
    }
    if (spec.kind == "rotation") {
      return Driver::rotation(std::move(table), spec.beta, spec.arcs, seed);
    }
    if (spec.kind == "deterministic") return Driver::deterministic(std::move(table), spec.index);
  } catch (const ConfigError&) {
    throw;
  } catch (const UsageError& e) {
    throw ConfigError("/driver", e.what());
  }
  throw ConfigError("/driver/kind", "unknown driver kind '" + spec.kind + "'");
}

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed for " + path.string());
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

}  // namespace eqp
