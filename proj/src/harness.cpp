#include "eqt/harness.hpp"

#include "eqt/error.hpp"
#include "eqt/lattice.hpp"

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace eqt {

namespace fs = std::filesystem;
using nlohmann::json;

// --- configuration --------------------------------------------------------

std::vector<int> KRange::values() const {
  std::vector<int> ks;
  for (int k = min; k <= max; k += step) {
    ks.push_back(k);
  }
  return ks;
}

namespace {

void check_keys(const json &j, std::initializer_list<const char *> allowed,
                const std::string &ctx) {
  if (!j.is_object()) {
    fail(ErrorCode::config_invalid, ctx + " must be an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char *a : allowed) {
      known = known || it.key() == a;
    }
    if (!known) {
      fail(ErrorCode::config_invalid, "unknown key '" + ctx + "." + it.key() + "'");
    }
  }
}

template <class T>
T field(const json &j, const char *key, const std::string &ctx) {
  if (!j.contains(key)) {
    fail(ErrorCode::config_invalid, "missing '" + ctx + "." + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    fail(ErrorCode::config_invalid, "'" + ctx + "." + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const json &j, const char *key, const std::string &ctx, T fallback) {
  return j.contains(key) ? field<T>(j, key, ctx) : fallback;
}

Eigen::MatrixXcd parse_h_term(const json &j, int n) {
  check_keys(j, {"re", "im"}, "observable.h_term");
  const auto re = field<std::vector<std::vector<double>>>(j, "re", "observable.h_term");
  const auto im = field_or<std::vector<std::vector<double>>>(
      j, "im", "observable.h_term",
      std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  if (static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n) {
    fail(ErrorCode::config_invalid, "h_term must be (d+1) x (d+1)");
  }
  Eigen::MatrixXcd h(n, n);
  for (int a = 0; a < n; ++a) {
    if (static_cast<int>(re[a].size()) != n || static_cast<int>(im[a].size()) != n) {
      fail(ErrorCode::config_invalid, "h_term must be (d+1) x (d+1)");
    }
    for (int b = 0; b < n; ++b) {
      h(a, b) = cplx(re[a][b], im[a][b]);
    }
  }
  return h;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json &j) {
  check_keys(j,
             {"schema_version", "model", "action", "symmetry", "observable", "isotype",
              "k_range", "sampling", "fit", "kernel", "output_dir"},
             "config");
  const int version = field<int>(j, "schema_version", "config");
  if (version != kSchemaVersion) {
    fail(ErrorCode::config_invalid,
         "unsupported schema_version " + std::to_string(version));
  }
  ExperimentConfig c;

  const json &jm = j.contains("model") ? j.at("model") : json::object();
  check_keys(jm, {"d"}, "model");
  const int d = field<int>(jm, "d", "model");
  if (d < 1 || d > 7) {
    fail(ErrorCode::config_invalid, "model.d must be in [1, 7]");
  }
  c.model = ProjectiveModel::make(d);

  c.action = LinearizedTorusAction::trivial(d);
  if (j.contains("action")) {
    const json &ja = j.at("action");
    check_keys(ja, {"g", "W"}, "action");
    const auto rows = field<std::vector<std::vector<long long>>>(ja, "W", "action");
    c.action = LinearizedTorusAction::from_rows(d, rows);
    if (ja.contains("g") && field<int>(ja, "g", "action") != c.action.g) {
      fail(ErrorCode::config_invalid, "action.g does not match the number of W rows");
    }
  }
  c.action.validate(c.model);

  c.symmetry = DiagonalSymmetry::identity(d);
  if (j.contains("symmetry")) {
    const json &js = j.at("symmetry");
    check_keys(js, {"phi", "theta_A"}, "symmetry");
    c.symmetry.phi = field<std::vector<double>>(js, "phi", "symmetry");
    c.symmetry.theta_A = field_or<double>(js, "theta_A", "symmetry", 0.0);
  }
  c.symmetry.validate(c.model);

  c.observable = Observable::constant(d);
  if (j.contains("observable")) {
    const json &jo = j.at("observable");
    check_keys(jo, {"u_terms", "h_term"}, "observable");
    c.observable = Observable{};
    if (jo.contains("u_terms")) {
      const json &ju = jo.at("u_terms");
      if (!ju.is_array()) {
        fail(ErrorCode::config_invalid, "observable.u_terms must be a list");
      }
      for (const auto &t : ju) {
        check_keys(t, {"beta", "coef"}, "observable.u_terms[]");
        const auto beta = field<MultiIndex>(t, "beta", "observable.u_terms[]");
        c.observable.u_terms[beta] +=
            field_or<double>(t, "coef", "observable.u_terms[]", 1.0);
      }
    }
    if (jo.contains("h_term")) {
      c.observable.h_term = parse_h_term(jo.at("h_term"), c.model.n_coords());
    }
    if (c.observable.u_terms.empty() && !c.observable.h_term) {
      fail(ErrorCode::config_invalid, "observable has no terms");
    }
  }
  c.observable.validate(c.model);

  if (j.contains("isotype")) {
    c.isotype = field<IsotypeLabel>(j, "isotype", "config");
  } else if (c.action.g > 0) {
    fail(ErrorCode::config_invalid, "missing 'config.isotype'");
  }
  if (static_cast<int>(c.isotype.size()) != c.action.g) {
    fail(ErrorCode::config_invalid, "isotype length must equal the torus rank");
  }

  if (!j.contains("k_range")) {
    fail(ErrorCode::config_invalid, "missing 'config.k_range'");
  }
  const json &jk = j.at("k_range");
  check_keys(jk, {"min", "max", "step"}, "k_range");
  c.k_range.min = field<int>(jk, "min", "k_range");
  c.k_range.max = field<int>(jk, "max", "k_range");
  c.k_range.step = field_or<int>(jk, "step", "k_range", 1);
  if (c.k_range.min < 0 || c.k_range.max < c.k_range.min || c.k_range.step < 1) {
    fail(ErrorCode::config_invalid, "k_range must be nonempty with step >= 1");
  }

  if (!j.contains("sampling")) {
    fail(ErrorCode::config_invalid, "missing 'config.sampling' (the seed is mandatory)");
  }
  const json &jsm = j.at("sampling");
  check_keys(jsm, {"n_samples", "seed"}, "sampling");
  c.n_samples = field<int>(jsm, "n_samples", "sampling");
  c.seed = field<std::uint64_t>(jsm, "seed", "sampling");
  if (c.n_samples < 2) {
    fail(ErrorCode::config_invalid, "sampling.n_samples must be at least 2");
  }

  if (j.contains("fit")) {
    check_keys(j.at("fit"), {"order"}, "fit");
    c.fit_order = field<int>(j.at("fit"), "order", "fit");
    if (c.fit_order < 1) {
      fail(ErrorCode::config_invalid, "fit.order must be positive");
    }
  }

  if (j.contains("kernel")) {
    check_keys(j.at("kernel"), {"u"}, "kernel");
    const auto u = field<std::vector<double>>(j.at("kernel"), "u", "kernel");
    double s = 0.0;
    for (double v : u) {
      if (v < 0.0) {
        fail(ErrorCode::config_invalid, "kernel.u entries must be nonnegative");
      }
      s += v;
    }
    if (static_cast<int>(u.size()) != c.model.n_coords() || s <= 0.0) {
      fail(ErrorCode::config_invalid, "kernel.u must have d+1 entries, not all zero");
    }
    c.kernel_u = u;
  }

  c.output_dir = field_or<std::string>(j, "output_dir", "config", "out");
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::config_invalid, "cannot read config " + path.string());
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    fail(ErrorCode::config_invalid, "config " + path.string() + " is not valid JSON");
  }
  return from_json(j);
}

namespace {

json observable_json(const Observable &f) {
  json terms = json::array();
  for (const auto &[beta, c] : f.u_terms) {
    terms.push_back({{"beta", beta}, {"coef", c}});
  }
  json o = {{"u_terms", terms}};
  if (f.h_term) {
    const Eigen::MatrixXcd &h = *f.h_term;
    std::vector<std::vector<double>> re(h.rows(), std::vector<double>(h.cols()));
    std::vector<std::vector<double>> im = re;
    for (int a = 0; a < h.rows(); ++a) {
      for (int b = 0; b < h.cols(); ++b) {
        re[a][b] = h(a, b).real();
        im[a][b] = h(a, b).imag();
      }
    }
    o["h_term"] = {{"re", re}, {"im", im}};
  }
  return o;
}

std::vector<std::vector<long long>> weight_rows(const LinearizedTorusAction &a) {
  std::vector<std::vector<long long>> rows(a.g, std::vector<long long>(a.n));
  for (int i = 0; i < a.g; ++i) {
    for (int j = 0; j < a.n; ++j) {
      rows[i][j] = a.W(i, j);
    }
  }
  return rows;
}

} // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = {{"d", model.d}};
  j["action"] = {{"g", action.g}, {"W", weight_rows(action)}};
  j["symmetry"] = {{"phi", symmetry.phi}, {"theta_A", symmetry.theta_A}};
  j["observable"] = observable_json(observable);
  j["isotype"] = isotype;
  j["k_range"] = {{"min", k_range.min}, {"max", k_range.max}, {"step", k_range.step}};
  j["sampling"] = {{"n_samples", n_samples}, {"seed", seed}};
  j["fit"] = {{"order", fit_order}};
  if (kernel_u) {
    j["kernel"] = {{"u", *kernel_u}};
  }
  j["output_dir"] = output_dir;
  return j;
}

std::string ExperimentConfig::hash() const {
  // Where results land does not change what is computed.
  json j = to_json();
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

std::string sha256_hex(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::numeric_failure, "SHA-256 digest failed");
  }
  static const char *hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

// --- cache ----------------------------------------------------------------

IntegralCache::IntegralCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

fs::path IntegralCache::path_for(const std::string &key) const {
  return dir_ / (key + ".json");
}

std::optional<ReducedIntegral> IntegralCache::get(const std::string &key) {
  const fs::path p = path_for(key);
  if (!fs::exists(p)) {
    return std::nullopt;
  }
  std::ifstream in(p);
  const json j = json::parse(in, nullptr, false);
  in.close();
  const bool ok = !j.is_discarded() && j.is_object() && j.contains("payload") &&
                  j.contains("checksum") && j["checksum"].is_string() &&
                  j["checksum"].get<std::string>() == sha256_hex(j["payload"].dump()) &&
                  j["payload"].value("key", std::string()) == key;
  if (!ok) {
    ++corrupt_;
    fs::remove(p);
    return std::nullopt;
  }
  const json &pl = j["payload"];
  ReducedIntegral r;
  r.value = pl.at("value").get<double>();
  r.stderr_ = pl.at("stderr").get<double>();
  r.n_samples = pl.at("n_samples").get<int>();
  ++hits_;
  return r;
}

void IntegralCache::put(const std::string &key, const ReducedIntegral &value) {
  const json payload = {{"key", key},
                        {"value", value.value},
                        {"stderr", value.stderr_},
                        {"n_samples", value.n_samples}};
  const json j = {{"payload", payload}, {"checksum", sha256_hex(payload.dump())}};
  const fs::path p = path_for(key);
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump() << '\n';
  }
  fs::rename(tmp, p);
}

std::string integral_key(const std::string &kind, const ExperimentConfig &cfg,
                         const Support &support, std::uint64_t seed, int n_samples) {
  const json j = {{"kind", kind},
                  {"d", cfg.model.d},
                  {"kappa_X", cfg.model.kappa_X},
                  {"W", weight_rows(cfg.action)},
                  {"observable", observable_json(cfg.observable)},
                  {"support", support},
                  {"seed", seed},
                  {"n_samples", n_samples}};
  return sha256_hex(j.dump());
}

// --- run records ----------------------------------------------------------

json calibration_to_json(const CalibrationRecord &rec) {
  json cands = json::array();
  for (const auto &c : rec.kappa_candidates) {
    cands.push_back({{"kappa", c.kappa},
                     {"quadrature_z", c.quadrature_z},
                     {"diagonal_ratio", c.diagonal_ratio}});
  }
  return {{"kappa_X", rec.kappa_X},
          {"kappa_candidates", cands},
          {"gamma_phase_sign", rec.gamma_phase_sign},
          {"h_orientation", rec.conventions.h_orientation},
          {"lefschetz_residuals", rec.lefschetz_residuals},
          {"forced_wrong", rec.forced_wrong}};
}

json RunRecord::to_json() const {
  return {{"command", command},
          {"config_hash", config_hash},
          {"seed", seed},
          {"calibration", calibration_to_json(calibration)},
          {"artifacts", artifacts},
          {"versions",
           {{"eqt", "0.1.0"},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"openssl", OPENSSL_VERSION_TEXT},
            {"compiler", __VERSION__}}},
          {"timings_ms", timings_ms}};
}

int exit_code_for(const Error &e) {
  switch (e.code()) {
  case ErrorCode::config_invalid:
    return 2;
  case ErrorCode::reduction_hypothesis_violated:
  case ErrorCode::degenerate_symmetry:
    return 3;
  default:
    return 4;
  }
}

// --- commands -------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Context {
  ExperimentConfig cfg;
  fs::path out;
  RunRecord run;
  Clock::time_point start;
  std::optional<IntegralCache> cache;

  DiagonalSymmetry applied_symmetry() const {
    return with_phase_sign(cfg.symmetry, run.calibration.gamma_phase_sign);
  }

  void write(const std::string &name, const std::string &content) {
    std::ofstream f(out / name, std::ios::binary);
    f << content;
    if (!f) {
      fail(ErrorCode::numeric_failure, "cannot write " + (out / name).string());
    }
    run.artifacts.push_back(name);
  }

  void finish() {
    run.timings_ms["total"] = ms_since(start);
    std::ofstream f(out / "run.json");
    f << run.to_json().dump(2) << '\n';
  }
};

Context setup(const CliOptions &opts, const std::string &command) {
  Context ctx;
  ctx.start = Clock::now();
  if (opts.config_path.empty()) {
    fail(ErrorCode::config_invalid, command + " needs --config");
  }
  ctx.cfg = ExperimentConfig::load(opts.config_path);
  if (opts.seed) {
    ctx.cfg.seed = *opts.seed;
  }
  if (opts.out_dir) {
    ctx.cfg.output_dir = *opts.out_dir;
  }
  ctx.out = ctx.cfg.output_dir;
  fs::create_directories(ctx.out);
  ctx.cache.emplace(ctx.out / "cache");

  const auto t0 = Clock::now();
  ctx.run.calibration = calibrate(opts.force_wrong_sign);
  ctx.run.timings_ms["calibration"] = ms_since(t0);
  ctx.cfg.model.kappa_X = ctx.run.calibration.kappa_X;
  ctx.run.command = command;
  ctx.run.config_hash = ctx.cfg.hash();
  ctx.run.seed = ctx.cfg.seed;
  return ctx;
}

std::string components_csv(const std::vector<FixedComponentReport> &comps) {
  std::ostringstream os;
  write_components_csv(comps, os);
  return os.str();
}

TracePrediction cached_prediction(Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  TracePrediction p;
  p.label = c.isotype;
  auto comps = find_fixed_components(c.action, c.symmetry, c.model);
  for (std::size_t l = 0; l < comps.size(); ++l) {
    FixedComponentReport rep = component_invariants(
        std::move(comps[l]), c.symmetry, c.action, c.model, {c.isotype},
        ctx.run.calibration.conventions, mix_seed(c.seed, 2 * l));
    const std::uint64_t s = mix_seed(c.seed, 2 * l + 1);
    const std::string key = integral_key("fbar", c, rep.support, s, c.n_samples);
    auto fb = ctx.cache->get(key);
    if (!fb) {
      fb = f_bar_integral(rep, c.observable, c.action, c.model, c.n_samples, s);
      ctx.cache->put(key, *fb);
    }
    rep.f_bar_integral = fb->value;
    rep.f_bar_stderr = fb->stderr_;
    p.components.push_back(std::move(rep));
  }
  return p;
}

ReductionDiagnostics quick_check(const Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  return check_regular_and_free(c.action, c.model, std::min(c.n_samples, 4096), c.seed);
}

TraceSeries compute_traces(Context &ctx, int threads) {
  const auto t0 = Clock::now();
  const IsotypeLabel label = ctx.cfg.isotype;
  TraceSeries s = trace_sweep(
      ctx.cfg.k_range.values(), [label](int) { return label; }, ctx.cfg.observable,
      ctx.applied_symmetry(), ctx.cfg.action, ctx.cfg.model, threads);
  ctx.run.timings_ms["traces"] = ms_since(t0);
  if (!s.failures.empty()) {
    fail(ErrorCode::numeric_failure, "trace at k = " +
                                         std::to_string(s.failures.front().first) +
                                         " failed: " + s.failures.front().second);
  }
  return s;
}

std::string two_column(const std::vector<int> &ks, const std::vector<double> &v,
                       const std::string &name) {
  std::ostringstream os;
  os << "# k " << name << '\n';
  for (std::size_t i = 0; i < ks.size(); ++i) {
    os << ks[i] << ' ' << format_double(v[i]) << '\n';
  }
  return os.str();
}

void write_diagnostics(Context &ctx, const ReductionDiagnostics &d) {
  std::ostringstream os;
  os << "key,value\n";
  os << "empty_locus," << d.empty_locus << '\n';
  os << "regular_value," << d.regular_value << '\n';
  os << "free_action," << d.free_action << '\n';
  os << "min_singular_value," << format_double(d.min_singular_value) << '\n';
  os << "stabilizer_order_M," << d.stabilizer_order_M << '\n';
  os << "vol_M0," << format_double(d.vol_M0) << '\n';
  os << "vol_M0_stderr," << format_double(d.vol_M0_stderr) << '\n';
  os << "v_eff_min," << format_double(d.v_eff_min) << '\n';
  os << "v_eff_mean," << format_double(d.v_eff_mean) << '\n';
  os << "v_eff_max," << format_double(d.v_eff_max) << '\n';
  os << "max_abs_phi," << format_double(d.max_abs_phi) << '\n';
  os << "feasible_supports," << d.feasible_supports.size() << '\n';
  os << "violation,\"" << d.violation << "\"\n";
  ctx.write("diagnostics.csv", os.str());
}

} // namespace

int cmd_analyze(const CliOptions &opts, std::ostream &out) {
  Context ctx = setup(opts, "analyze");
  const ExperimentConfig &c = ctx.cfg;
  const auto t0 = Clock::now();
  const ReductionDiagnostics diag =
      diagnose_reduction(c.action, c.model, c.n_samples, c.seed);
  ctx.run.timings_ms["diagnostics"] = ms_since(t0);
  write_diagnostics(ctx, diag);
  int code = 0;
  if (diag.empty_locus) {
    out << "empty zero locus: the moment map misses 0\n";
    if (c.action.g > 0) {
      out << "isotype " << format_label(c.isotype)
          << " vanishes for k >= " << vanishing_threshold(c.isotype, c.action) << '\n';
    }
    ctx.write("components.csv", components_csv({}));
  } else if (!diag.regular_value || !diag.free_action) {
    out << "hypothesis violation: " << diag.violation << '\n';
    if (diag.witness) {
      const Eigen::VectorXd u = diag.witness->moduli_squared();
      out << "witness |z|^2 =";
      for (int j = 0; j < u.size(); ++j) {
        out << ' ' << format_double(u[j]);
      }
      out << '\n';
    }
    code = 3;
  } else {
    const TracePrediction p = cached_prediction(ctx);
    ctx.write("components.csv", components_csv(p.components));
    out << "vol(M0) = " << format_double(diag.vol_M0) << " +- "
        << format_double(diag.vol_M0_stderr) << '\n';
    out << p.components.size() << " fixed component(s)\n";
  }
  ctx.finish();
  return code;
}

int cmd_trace(const CliOptions &opts, std::ostream &out) {
  Context ctx = setup(opts, "trace");
  const TraceSeries s = compute_traces(ctx, opts.threads);
  std::ostringstream os;
  write_trace_csv(s, os);
  ctx.write("trace.csv", os.str());
  std::vector<int> ks;
  std::vector<double> mag;
  for (const auto &r : s.records) {
    ks.push_back(r.k);
    mag.push_back(std::abs(r.trace));
  }
  ctx.write("panel_trace.dat", two_column(ks, mag, "abs_trace"));
  out << s.records.size() << " traces written\n";
  ctx.finish();
  return 0;
}

namespace {

std::pair<TracePrediction, std::vector<cplx>> predictions_for(Context &ctx) {
  const auto t0 = Clock::now();
  const ReductionDiagnostics diag = quick_check(ctx);
  TracePrediction p;
  p.label = ctx.cfg.isotype;
  if (!diag.empty_locus) {
    p = cached_prediction(ctx);
  }
  std::vector<cplx> values;
  for (int k : ctx.cfg.k_range.values()) {
    values.push_back(p(k));
  }
  ctx.run.timings_ms["prediction"] = ms_since(t0);
  return {std::move(p), std::move(values)};
}

} // namespace

int cmd_predict(const CliOptions &opts, std::ostream &out) {
  Context ctx = setup(opts, "predict");
  const auto [p, values] = predictions_for(ctx);
  std::ostringstream os;
  os << "k,pred_re,pred_im\n";
  const auto ks = ctx.cfg.k_range.values();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    os << ks[i] << ',' << format_double(values[i].real()) << ','
       << format_double(values[i].imag()) << '\n';
  }
  ctx.write("prediction.csv", os.str());
  ctx.write("components.csv", components_csv(p.components));
  out << p.components.size() << " fixed component(s); " << ks.size()
      << " predictions written\n";
  ctx.finish();
  return 0;
}

int cmd_compare(const CliOptions &opts, std::ostream &out) {
  Context ctx = setup(opts, "compare");
  const TraceSeries s = compute_traces(ctx, opts.threads);
  const auto [p, values] = predictions_for(ctx);
  {
    std::ostringstream os;
    write_comparison_csv(s, values, os);
    ctx.write("comparison.csv", os.str());
  }
  ctx.write("components.csv", components_csv(p.components));

  double worst = 0.0;
  std::vector<int> ks;
  std::vector<double> ratio;
  std::vector<double> err;
  for (std::size_t i = 0; i < values.size(); ++i) {
    worst = std::max(worst, std::abs(s.records[i].trace - values[i]));
    if (std::abs(values[i]) > 1e-300) {
      const cplx r = s.records[i].trace * std::conj(values[i]) / std::norm(values[i]);
      ks.push_back(s.records[i].k);
      ratio.push_back(std::abs(r));
      err.push_back(std::abs(r - 1.0));
    }
  }
  ctx.write("panel_abs_ratio.dat", two_column(ks, ratio, "abs_ratio"));
  ctx.write("panel_error.dat", two_column(ks, err, "abs_ratio_minus_one"));
  out << "max |trace - prediction| = " << format_double(worst) << '\n';
  if (!ks.empty()) {
    out << "abs_ratio at k = " << ks.back() << ": " << format_double(ratio.back())
        << '\n';
  }

  std::ostringstream fit_text;
  if (static_cast<int>(ks.size()) >= ctx.cfg.fit_order + 3) {
    try {
      const FitReport fit = compare_and_fit(s, values, ctx.cfg.fit_order);
      write_fit_report(fit, fit_text);
      out << "log-log slope of |ratio - 1| = " << format_double(fit.slope)
          << " (95% CI " << format_double(fit.slope_ci_low) << ", "
          << format_double(fit.slope_ci_high) << ")\n";
    } catch (const Error &e) {
      throw Error(e.code(), std::string("compare/fit: ") + e.what());
    }
  } else {
    fit_text << "fit skipped: " << ks.size() << " levels with nonzero prediction\n";
    out << fit_text.str();
  }
  ctx.write("fit.txt", fit_text.str());
  ctx.finish();
  return 0;
}

int cmd_kernel(const CliOptions &opts, std::ostream &out) {
  Context ctx = setup(opts, "kernel");
  const ExperimentConfig &c = ctx.cfg;
  std::vector<std::pair<std::string, PointX>> points;
  if (c.action.g == 0) {
    points.emplace_back("locus", PointX::normalized(
                                     Eigen::VectorXcd::Ones(c.model.n_coords())));
  } else {
    const Support all = [&] {
      Support s(c.action.n);
      for (int j = 0; j < c.action.n; ++j) {
        s[j] = j;
      }
      return s;
    }();
    const Support E = feasible_closure(c.action, all);
    if (!E.empty()) {
      points.emplace_back("locus", *interior_point(c.action, E));
    }
  }
  std::optional<PointX> probe;
  if (c.kernel_u) {
    Eigen::VectorXcd v(c.model.n_coords());
    for (int j = 0; j < v.size(); ++j) {
      v[j] = std::sqrt((*c.kernel_u)[j]);
    }
    probe = PointX::normalized(v);
    points.emplace_back("probe", *probe);
  }
  std::ostringstream os;
  os << "k,point,log_abs,arg\n";
  for (int k : c.k_range.values()) {
    const SectionBasis full = make_section_basis(k, c.model);
    const IsotypeBasis iso = isotype_basis(k, c.isotype, c.action, full);
    for (const auto &[name, x] : points) {
      const LogComplex v = log_equivariant_kernel(x, x, iso);
      os << k << ',' << name << ',' << format_double(v.log_abs) << ','
         << format_double(v.is_zero() ? 0.0 : v.arg) << '\n';
    }
  }
  ctx.write("kernel.csv", os.str());
  if (probe && moment_map(*probe, c.action).norm() > 0.05) {
    const DecayReport d =
        decay_probe(*probe, *probe, c.isotype, c.k_range.values(), c.action, c.model);
    out << "decay slope at probe = " << format_double(d.slope) << " (" << d.floored
        << " level(s) floored)\n";
  }
  out << points.size() << " point(s), " << c.k_range.values().size() << " levels\n";
  ctx.finish();
  return 0;
}

// --- self-test ------------------------------------------------------------

namespace {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Check check_isotype_dims() {
  Check c{"model.isotype_dimensions_sum", true, ""};
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  for (int k = 0; k <= 40; ++k) {
    long long s = 0;
    for (const auto &[lab, n] : isotype_dimensions(k, action)) {
      s += n;
    }
    if (s != static_cast<long long>(binomial(k + 2, 2) + 0.5)) {
      c.pass = false;
      c.detail = "k = " + std::to_string(k);
    }
  }
  return c;
}

Check check_isotype_kernel_sum() {
  Check c{"symmetry.isotype_kernels_sum_to_szego", false, ""};
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  const auto pts = sample_sphere(2, 5, model);
  const int k = 10;
  const SectionBasis full = make_section_basis(k, model);
  cplx sum{0.0, 0.0};
  for (const auto &[lab, n] : isotype_dimensions(k, action)) {
    sum += equivariant_kernel(pts[0], pts[1], isotype_basis(k, lab, action, full));
  }
  const cplx ref = szego_kernel(pts[0], pts[1], k, model);
  const double err = std::abs(sum - ref) / std::abs(ref);
  c.pass = err < 1e-10;
  c.detail = "relative error " + num(err);
  return c;
}

Check check_smith() {
  Check c{"lattice.smith_normal_form", false, ""};
  IntMatrix A(3, 3);
  A << 2, 4, 4, -6, 6, 12, 10, -4, -16;
  const SmithForm s = smith_normal_form(A);
  c.pass = (s.U * A * s.V - s.D).cwiseAbs().maxCoeff() == 0 &&
           std::abs(s.D(0, 0)) == 2 && std::abs(s.D(1, 1)) == 6 &&
           std::abs(s.D(2, 2)) == 12;
  c.detail = "diag " + std::to_string(s.D(0, 0)) + "," + std::to_string(s.D(1, 1)) +
             "," + std::to_string(s.D(2, 2));
  return c;
}

Check check_p2_volume() {
  Check c{"reduction.reduced_volume_p2", false, ""};
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  const ReducedIntegral v = reduced_volume(action, model, 20000, 3);
  c.pass = std::abs(v.value - kPi / 2) <= 4 * v.stderr_ + 1e-12;
  c.detail = "vol " + num(v.value) + " +- " + num(v.stderr_);
  return c;
}

Check check_p2_components() {
  Check c{"reduction.fixed_components_p2", false, ""};
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.0, 0.7, 1.9};
  const auto comps = find_fixed_components(action, sym, model);
  c.pass = comps.size() == 2;
  c.detail = std::to_string(comps.size()) + " component(s)";
  return c;
}

Check check_toeplitz_d1() {
  Check c{"toeplitz.trace_d1_u0", true, ""};
  const ProjectiveModel model = ProjectiveModel::make(1);
  const auto action = LinearizedTorusAction::trivial(1);
  const Observable f = Observable::u_monomial({1, 0});
  for (int k = 0; k <= 40; ++k) {
    const cplx t = trace_psi(k, {}, f, DiagonalSymmetry::identity(1), action, model);
    if (std::abs(t - cplx((k + 1) / 2.0, 0.0)) > 1e-10) {
      c.pass = false;
      c.detail = "k = " + std::to_string(k);
    }
  }
  return c;
}

Check check_trace_quadrature() {
  Check c{"toeplitz.trace_vs_kernel_quadrature", false, ""};
  const ProjectiveModel model = ProjectiveModel::make(1);
  const auto action = LinearizedTorusAction::from_rows(1, {{1, -1}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(1);
  sym.phi = {0.2, 1.1};
  sym.theta_A = 0.4;
  const Observable f = Observable::u_monomial({0, 1});
  const int k = 6;
  const cplx exact = trace_psi(k, {0}, f, sym, action, model);
  const auto q = trace_via_kernel_quadrature(k, {0}, f, sym, action, model, 1 << 14, 9);
  const double z = std::abs(q.value - exact) / std::max(q.stderr_, 1e-15);
  c.pass = z <= 4.0;
  c.detail = "z = " + num(z);
  return c;
}

Check check_lefschetz_d2(const CalibrationRecord &cal) {
  Check c{"asymptotics.lefschetz_exact_d2", false, ""};
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::trivial(2);
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.0, 0.9, 2.3};
  sym.theta_A = 0.5;
  const Observable one = Observable::constant(2);
  const TracePrediction p =
      prepare_prediction(one, sym, action, model, {}, 1, 1, cal.conventions);
  const DiagonalSymmetry applied = with_phase_sign(sym, cal.gamma_phase_sign);
  double worst = 0.0;
  for (int k = 0; k <= 40; ++k) {
    worst = std::max(worst, std::abs(trace_psi(k, {}, one, applied, action, model) - p(k)));
  }
  c.pass = worst <= 1e-8;
  c.detail = "max residual " + num(worst);
  return c;
}

Check check_full_theorem_ratio(const CalibrationRecord &cal) {
  Check c{"asymptotics.full_theorem_ratio_p2 (h_orientation pin)", false, ""};
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.0, 0.7, 1.9};
  const Observable f = Observable::u_monomial({0, 1, 0});
  const TracePrediction p =
      prepare_prediction(f, sym, action, model, {0}, 4000, 5, cal.conventions);
  const DiagonalSymmetry applied = with_phase_sign(sym, cal.gamma_phase_sign);
  const int k = 40;
  const cplx r = trace_psi(k, {0}, f, applied, action, model) / p(k);
  c.pass = std::abs(r - 1.0) < 0.2;
  c.detail = "|ratio - 1| at k = 40: " + num(std::abs(r - 1.0));
  return c;
}

Check check_vanishing() {
  Check c{"asymptotics.vanishing_threshold", true, ""};
  const ProjectiveModel model = ProjectiveModel::make(1);
  const auto action = LinearizedTorusAction::from_rows(1, {{1, 1}});
  const IsotypeLabel lab{-3};
  const int k0 = vanishing_threshold(lab, action);
  for (int k = 0; k <= 40; ++k) {
    const cplx t = trace_psi(k, lab, Observable::constant(1),
                             DiagonalSymmetry::identity(1), action, model);
    const bool zero = std::abs(t) == 0.0;
    if (zero == (k == 3)) {
      c.pass = false;
    }
  }
  c.pass = c.pass && k0 == 4;
  c.detail = "k0 = " + std::to_string(k0);
  return c;
}

Check check_cache(const fs::path &dir) {
  Check c{"harness.cache_checksum", false, ""};
  IntegralCache cache(dir);
  ReducedIntegral v;
  v.value = kPi / 3;
  v.stderr_ = 1e-3;
  v.n_samples = 7;
  const std::string key = sha256_hex("selftest-entry");
  cache.put(key, v);
  {
    std::ofstream f(cache.path_for(key), std::ios::app);
    f << "garbage";
  }
  std::fstream f(cache.path_for(key), std::ios::in | std::ios::out);
  f.seekp(20);
  f.put('#');
  f.close();
  const bool detected = !cache.get(key).has_value() && cache.corrupt() == 1;
  cache.put(key, v);
  const auto back = cache.get(key);
  c.pass = detected && back && back->value == v.value && back->stderr_ == v.stderr_;
  c.detail = detected ? "corruption detected and rebuilt" : "corruption missed";
  return c;
}

} // namespace

int cmd_selftest(const CliOptions &opts, std::ostream &out) {
  const auto t0 = Clock::now();
  const fs::path dir = opts.out_dir ? fs::path(*opts.out_dir) : fs::path("eqt_selftest");
  fs::create_directories(dir);
  std::vector<Check> checks;

  CalibrationRecord cal;
  try {
    cal = calibrate(opts.force_wrong_sign);
    checks.push_back({"calibration.kappa_X", cal.kappa_X == 1.0,
                      "kappa_X = " + num(cal.kappa_X)});
  } catch (const Error &e) {
    checks.push_back({"calibration", false, e.what()});
  }
  {
    const double r = lefschetz_residual(cal.gamma_phase_sign, cal.conventions);
    checks.push_back({"calibration.lefschetz_identity (h_orientation pin)", r <= 1e-8,
                      "max residual " + num(r)});
  }
  for (auto fn : {check_isotype_dims, check_isotype_kernel_sum, check_smith,
                  check_p2_volume, check_p2_components, check_toeplitz_d1,
                  check_trace_quadrature, check_vanishing}) {
    try {
      checks.push_back(fn());
    } catch (const std::exception &e) {
      checks.push_back({"exception", false, e.what()});
    }
  }
  for (auto fn : {check_lefschetz_d2, check_full_theorem_ratio}) {
    try {
      checks.push_back(fn(cal));
    } catch (const std::exception &e) {
      checks.push_back({"exception", false, e.what()});
    }
  }
  checks.push_back(check_cache(dir / "cache"));

  bool ok = true;
  std::ostringstream report;
  for (const auto &c : checks) {
    report << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.pass;
  }
  out << report.str();
  {
    std::ofstream f(dir / "calibration.json");
    f << calibration_to_json(cal).dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "selftest.txt");
    f << report.str();
  }
  out << (ok ? "selftest passed" : "selftest FAILED") << " in "
      << num(ms_since(t0) / 1000.0) << " s\n";
  return ok ? 0 : 4;
}

int run_command(const std::string &name, const CliOptions &opts, std::ostream &out,
                std::ostream &err) {
  try {
    if (name == "analyze") {
      return cmd_analyze(opts, out);
    }
    if (name == "trace") {
      return cmd_trace(opts, out);
    }
    if (name == "predict") {
      return cmd_predict(opts, out);
    }
    if (name == "compare") {
      return cmd_compare(opts, out);
    }
    if (name == "kernel") {
      return cmd_kernel(opts, out);
    }
    if (name == "selftest") {
      return cmd_selftest(opts, out);
    }
    err << "unknown command '" << name << "'\n";
    return 2;
  } catch (const HypothesisViolation &e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
}

} // namespace eqt
