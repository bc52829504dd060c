#include "dibs/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dibs {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw std::runtime_error("config: " + path + ": " + what);
}

Vec get_vec(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Mat get_mat(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected a row-major matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) bad(path, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Box get_box(const json& j, const std::string& path) {
  if (!j.contains("lower") || !j.contains("upper"))
    bad(path, "box needs lower/upper");
  return Box(get_vec(j["lower"], path + ".lower"),
             get_vec(j["upper"], path + ".upper"));
}

KInf get_kinf(const json& j, const std::string& path) {
  if (j.is_number()) return KInf::linear(j.get<double>());
  const std::string form = j.value("form", "linear");
  const double c = j.at("c").get<double>();
  if (form == "linear") return KInf::linear(c);
  if (form == "power") return KInf::power(c, j.at("p").get<double>());
  bad(path, "unknown gain form " + form);
}

GeometricSet get_set(const json& j, const std::string& path) {
  const std::string kind = j.value("kind", "rectangle");
  if (kind == "rectangle") return GeometricSet::rectangle(get_box(j, path));
  if (kind == "ellipsoid")
    return GeometricSet::ellipsoid(get_vec(j.at("center"), path + ".center"),
                                   get_vec(j.at("coeffs"), path + ".coeffs"),
                                   j.at("level").get<double>());
  bad(path, "unknown set kind " + kind);
}

int template_index(const NetworkSpec& net, const std::string& name) {
  for (std::size_t t = 0; t < net.templates.size(); ++t)
    if (net.templates[t].name == name) return static_cast<int>(t);
  throw std::runtime_error("config: unknown template " + name);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

LoadedConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: parse error: ") + e.what());
  }

  LoadedConfig cfg;
  const std::string canonical = j.dump();
  cfg.hash = fnv1a64(canonical.data(), canonical.size());

  NetworkSpec& net = cfg.net;
  net.tau = j.at("tau").get<double>();
  const std::string norm = j.value("eps_tilde_norm", "inf");
  if (norm == "inf")
    net.eps_tilde_norm = NormConvention::infinity;
  else if (norm == "euclid")
    net.eps_tilde_norm = NormConvention::euclidean;
  else
    bad("eps_tilde_norm", "expected inf or euclid");
  net.eta_safety = j.value("eta_safety", 0.99);
  net.snap_eta = j.value("snap_eta", true);
  const std::string margin = j.value("spec_margin", "eps-plus-chi");
  if (margin == "eps")
    net.margin = SpecMargin::eps;
  else if (margin == "eps-plus-chi")
    net.margin = SpecMargin::eps_plus_chi;
  else
    bad("spec_margin", "expected eps or eps-plus-chi");
  if (j.contains("safe_margin") && j["safe_margin"].is_number()) {
    net.safe_margin = SafeMargin::value;
    net.safe_margin_value = j["safe_margin"].get<double>();
  } else {
    const std::string sm = j.value("safe_margin", "eps");
    if (sm == "eps")
      net.safe_margin = SafeMargin::eps;
    else if (sm == "eta")
      net.safe_margin = SafeMargin::eta;
    else
      bad("safe_margin", "expected eps, eta or a number");
  }
  net.rk4_substeps = j.value("rk4_substeps", 100);

  if (!j.contains("templates") || !j["templates"].is_array())
    bad("templates", "missing template list");

  /* first pass: names (slots may reference any template) */
  for (const auto& tj : j["templates"]) {
    SubsystemTemplate t;
    t.name = tj.at("name").get<std::string>();
    net.templates.push_back(std::move(t));
  }
  for (std::size_t ti = 0; ti < j["templates"].size(); ++ti) {
    const auto& tj = j["templates"][ti];
    SubsystemTemplate& t = net.templates[ti];
    const std::string base = "templates[" + std::to_string(ti) + "]";
    t.field = VectorField::affine(get_mat(tj.at("A"), base + ".A"),
                                  get_mat(tj.at("B"), base + ".B"),
                                  get_mat(tj.at("D"), base + ".D"));
    t.state_domain = get_box(tj.at("state_domain"), base + ".state_domain");
    t.input_domain = get_box(tj.at("input_domain"), base + ".input_domain");
    const auto& lj = tj.at("lyapunov");
    t.lyap.lambda = lj.at("lambda").get<double>();
    t.lyap.alpha_low = get_kinf(lj.at("alpha_low"), base + ".alpha_low");
    t.lyap.alpha_high = get_kinf(lj.at("alpha_high"), base + ".alpha_high");
    t.lyap.sigma_u = get_kinf(lj.at("sigma_u"), base + ".sigma_u");
    t.lyap.sigma_d = get_kinf(lj.at("sigma_d"), base + ".sigma_d");
    t.lyap.gamma = get_kinf(lj.at("gamma"), base + ".gamma");
    t.v_coeffs = get_vec(tj.at("v_coeffs"), base + ".v_coeffs");
    t.eps = tj.at("eps").get<double>();
    t.omega = tj.value("omega", 0.0);
    if (tj.contains("psi")) t.psi_override = tj["psi"].get<double>();
    if (tj.contains("chi")) t.chi_override = tj["chi"].get<double>();
    t.c_alpha = tj.value("c_alpha", 1.0);
    if (tj.contains("c_sigma")) t.c_sigma = tj["c_sigma"].get<double>();
    if (tj.contains("target")) t.target = get_set(tj["target"], base + ".target");
    if (tj.contains("obstacle"))
      t.obstacle = get_box(tj["obstacle"], base + ".obstacle");
    if (tj.contains("slots"))
      for (const auto& sj : tj["slots"]) {
        TemplateSlot slot;
        slot.source_template =
            template_index(net, sj.at("source").get<std::string>());
        t.slots.push_back(slot);
      }
  }

  const auto& nj = j.at("network");
  if (nj.contains("chain_of_pairs")) {
    /* cascade of (upper, lower) pairs: the upper system of stage i is
     * disturbed by the upper system of stage i-1 (zero for i=1) and by
     * its own lower system; the lower system by its upper system */
    const int N = nj["chain_of_pairs"].get<int>();
    if (N < 1) bad("network.chain_of_pairs", "needs at least one pair");
    if (net.templates.size() != 2)
      bad("network.chain_of_pairs", "expects exactly two templates");
    for (int i = 1; i <= N; ++i) {
      SubsystemInstance up;
      up.id = "1_" + std::to_string(i);
      up.tmpl = 0;
      if (i == 1)
        up.neighbors.push_back({"", true});
      else
        up.neighbors.push_back({"1_" + std::to_string(i - 1), false});
      up.neighbors.push_back({"2_" + std::to_string(i), false});
      net.instances.push_back(std::move(up));
      SubsystemInstance lo;
      lo.id = "2_" + std::to_string(i);
      lo.tmpl = 1;
      lo.neighbors.push_back({"1_" + std::to_string(i), false});
      net.instances.push_back(std::move(lo));
    }
  } else if (nj.contains("instances")) {
    for (const auto& ij : nj["instances"]) {
      SubsystemInstance inst;
      inst.id = ij.at("id").get<std::string>();
      inst.tmpl = template_index(net, ij.at("template").get<std::string>());
      if (ij.contains("neighbors"))
        for (const auto& nb : ij["neighbors"]) {
          if (nb.contains("zero") && nb["zero"].get<bool>())
            inst.neighbors.push_back({"", true});
          else
            inst.neighbors.push_back({nb.at("id").get<std::string>(), false});
        }
      net.instances.push_back(std::move(inst));
    }
  } else {
    bad("network", "needs instances or chain_of_pairs");
  }

  if (j.contains("initial_states"))
    for (const auto& [id, xj] : j["initial_states"].items())
      cfg.x0[id] = get_vec(xj, "initial_states." + id);
  if (j.contains("x0_sample"))
    for (const auto& [name, bj] : j["x0_sample"].items())
      cfg.x0_sample[name] = get_box(bj, "x0_sample." + name);
  cfg.x0_seed = j.value("x0_seed", 1);

  net.validate();
  return cfg;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace dibs
