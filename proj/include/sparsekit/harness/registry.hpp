#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsekit/harness/experiments.hpp"

namespace sparsekit {

inline constexpr const char* toolkit_version = "0.1.0";

using json = nlohmann::ordered_json;

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, errc::internal, "sha256: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  require(ok, errc::internal, "sha256: digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

struct ExperimentOutput {
  std::string name;  // file stem
  CsvTable table;
  // Wall-clock columns change between runs; such tables sit outside the reproducibility contract.
  bool deterministic = true;
};

struct ExperimentInfo {
  std::string id;
  std::string description;
  json defaults;
  std::function<std::vector<ExperimentOutput>(const json& params, std::uint64_t seed)> run;
};

struct ExperimentSpec {
  std::string id;
  json overrides = json::object();
  std::uint64_t seed = 1;
  std::optional<std::size_t> trials;
  std::filesystem::path out = "results";
};

struct OutputRecord {
  std::string file;
  std::string sha256;
  std::size_t rows = 0;
  bool deterministic = true;
};

struct RunManifest {
  std::string version;
  std::string experiment;
  json config;
  std::uint64_t seed = 0;
  std::string started, finished;
  std::vector<OutputRecord> outputs;

  json to_json() const {
    json files = json::array();
    for (const auto& o : outputs)
      files.push_back({{"file", o.file}, {"sha256", o.sha256}, {"rows", o.rows}, {"deterministic", o.deterministic}});
    return {{"toolkit", "sparsekit"}, {"version", version}, {"experiment", experiment}, {"seed", seed},
            {"config", config},       {"started", started}, {"finished", finished},     {"outputs", files}};
  }
};

namespace detail {

template <class T>
std::vector<T> json_list(const json& j, const char* key) {
  return j.at(key).get<std::vector<T>>();
}

inline CsvTable summary_table(const std::vector<ScaSummaryRow>& rows, bool by_n, bool timing) {
  std::vector<std::string> cols{"solver", by_n ? "n" : "sigma_noise", "trials"};
  if (timing) {
    cols.push_back("mean_seconds");
  } else {
    cols.insert(cols.end(), {"support_ok_rate", "mean_mse"});
  }
  CsvTable t(cols);
  for (const auto& r : rows) {
    std::vector<std::string> f{r.solver, by_n ? std::to_string(r.n) : format_double(r.sigma_noise), std::to_string(r.trials)};
    if (timing) {
      f.push_back(format_double(r.mean_seconds));
    } else {
      f.push_back(format_double(r.support_ok_rate));
      f.push_back(format_double(r.mean_mse));
    }
    t.row(f);
  }
  return t;
}

inline ScaBenchmarkConfig sca_config(const json& p, std::uint64_t seed) {
  ScaBenchmarkConfig c;
  c.n_values = json_list<Eigen::Index>(p, "n_values");
  c.noise_values = json_list<double>(p, "noise_values");
  c.solvers = json_list<std::string>(p, "solvers");
  c.trials = p.at("trials").get<std::size_t>();
  c.p = p.at("p").get<double>();
  c.sigma_on = p.at("sigma_on").get<double>();
  c.sigma_off = p.at("sigma_off").get<double>();
  c.seed = seed;
  return c;
}

inline OfdmSweepConfig ofdm_config(const json& p, std::uint64_t seed) {
  OfdmSweepConfig c;
  c.cnr_db = json_list<double>(p, "cnr_db");
  c.blocks = p.at("trials").get<std::size_t>();
  c.equalizer = p.at("equalizer").get<std::string>() == "mmse" ? Equalizer::mmse : Equalizer::zf;
  require(p.at("equalizer") == "zf" || p.at("equalizer") == "mmse", errc::usage, "equalizer must be zf or mmse");
  c.mimat.alpha = p.at("mimat_alpha").get<double>();
  c.mimat.max_iters = p.at("mimat_max_iters").get<std::size_t>();
  c.seed = seed;
  return c;
}

inline CsvTable ser_table(const std::vector<SerRow>& rows) {
  CsvTable t({"cnr_db", "estimator", "ser", "ci_halfwidth", "seed_count"});
  for (const auto& r : rows)
    t.row({format_double(r.cnr_db), r.estimator, format_double(r.ser), format_double(r.ci_halfwidth), std::to_string(r.blocks)});
  return t;
}

inline std::string count_or_blank(std::size_t v) { return v ? std::to_string(v) : ""; }

inline std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> reg;

  reg.push_back({"fig4", "iterative reconstruction with Chebyshev and CG acceleration (bandpass, random samples)",
                 {{"n", 256}, {"band_lo", 24}, {"band_width", 16}, {"osr", 1.0}, {"target_snr_db", 40.0},
                  {"max_iters", 2000}, {"trials", 100}},
                 [](const json& p, std::uint64_t seed) {
                   AccelerationConfig c;
                   c.n = p.at("n");
                   c.band_lo = p.at("band_lo");
                   c.band_width = p.at("band_width");
                   c.osr = p.at("osr");
                   c.target_snr_db = p.at("target_snr_db");
                   c.max_iters = p.at("max_iters");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   const auto trials = acceleration_study(c);
                   CsvTable per({"trial", "condition", "plain_iters", "chebyshev_iters", "cg_iters", "fixed_point_gap"});
                   for (const auto& t : trials)
                     per.row({std::to_string(t.trial), format_double(t.condition), count_or_blank(t.plain),
                              count_or_blank(t.chebyshev), count_or_blank(t.cg), format_double(t.fixed_point_gap)});
                   CsvTable trace({"iteration", "plain_snr_db", "chebyshev_snr_db", "cg_snr_db"});
                   if (!trials.empty()) {
                     const auto& t = trials.front();
                     auto at = [](const std::vector<double>& v, std::size_t i) {
                       return v.empty() ? std::string() : format_double(v[std::min(i, v.size() - 1)]);
                     };
                     const std::size_t len = std::min<std::size_t>(200, t.plain_trace.size());
                     for (std::size_t i = 0; i < len; ++i)
                       trace.row({std::to_string(i + 1), at(t.plain_trace, i), at(t.chebyshev_trace, i), at(t.cg_trace, i)});
                   }
                   return std::vector<ExperimentOutput>{{"fig4", per}, {"fig4_trace", trace}};
                 }});

  reg.push_back({"fig6", "IMAT SNR versus iteration for DFT-sparse signals from random samples",
                 {{"n", 256}, {"k", 8}, {"m", 32}, {"alpha", 0.3}, {"trials", 40}},
                 [](const json& p, std::uint64_t seed) {
                   ImatTraceConfig c;
                   c.n = p.at("n");
                   c.k = p.at("k");
                   c.m = p.at("m");
                   c.imat.alpha = p.at("alpha");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   const auto trials = imat_trace_study(c);
                   CsvTable mean({"iteration", "mean_snr_db"});
                   const auto mt = mean_trace(trials);
                   for (std::size_t i = 0; i < mt.size(); ++i) mean.row({std::to_string(i + 1), format_double(mt[i])});
                   CsvTable per({"trial", "iterations", "peak_snr_db", "settle_iteration", "support_ok"});
                   for (std::size_t i = 0; i < trials.size(); ++i)
                     per.row({std::to_string(i), std::to_string(trials[i].snr.size()), format_double(trials[i].peak_db),
                              std::to_string(trials[i].settle), trials[i].support_ok ? "1" : "0"});
                   return std::vector<ExperimentOutput>{{"fig6", mean}, {"fig6_trials", per}};
                 }});

  reg.push_back({"fig7", "minimal random-sample count for 80% exact IMAT recovery versus sparsity",
                 {{"n", 1024}, {"ks", {4, 8, 16, 32}}, {"success_rate", 0.8}, {"success_snr_db", 100.0}, {"trials", 25}},
                 [](const json& p, std::uint64_t seed) {
                   PhaseTransitionConfig c;
                   c.n = p.at("n");
                   c.ks = json_list<std::size_t>(p, "ks");
                   c.success_rate = p.at("success_rate");
                   c.success_snr_db = p.at("success_snr_db");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   return std::vector<ExperimentOutput>{{"fig7", phase_transition_table(phase_transition(c))}};
                 }});

  reg.push_back({"fig10", "burst erasure recovery with the DFT code and error locator polynomial",
                 {{"message", 16}, {"parity", 16}, {"burst_start", 1}, {"burst_length", 16}, {"scattered_max", 8},
                  {"trials", 20}},
                 [](const json& p, std::uint64_t seed) {
                   ErasureStudyConfig c;
                   c.message = p.at("message");
                   c.parity = p.at("parity");
                   c.burst_start = p.at("burst_start");
                   c.burst_length = p.at("burst_length");
                   c.scattered_max = p.at("scattered_max");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   ErasureExample ex;
                   const auto rows = erasure_study(c, &ex);
                   CsvTable t({"pattern", "erasures", "trial", "snr_db"});
                   for (const auto& r : rows) t.row({r.pattern, std::to_string(r.erasures), std::to_string(r.trial), format_double(r.snr_db)});
                   CsvTable s({"index", "original", "received", "recovered"});
                   for (Eigen::Index i = 0; i < ex.original.size(); ++i)
                     s.row({std::to_string(i), format_double(ex.original[i].real()), format_double(ex.received[i].real()),
                            format_double(ex.recovered[i].real())});
                   return std::vector<ExperimentOutput>{{"fig10", t}, {"fig10_samples", s}};
                 }});

  reg.push_back({"fig15", "convolutional erasure decoding SNR versus erasure rate (30 CG iterations)",
                 {{"rates", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}}, {"input_length", 50}, {"cg_iters", 30},
                  {"trials", 30}},
                 [](const json& p, std::uint64_t seed) {
                   ConvErasureConfig c;
                   c.rates = json_list<double>(p, "rates");
                   c.input_length = p.at("input_length");
                   c.cg_iters = p.at("cg_iters");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   CsvTable t({"erasure_rate", "erasures", "mean_snr_db"});
                   for (const auto& r : conv_erasure_study(c))
                     t.row({format_double(r.rate), std::to_string(r.erasures), format_double(r.mean_snr_db)});
                   return std::vector<ExperimentOutput>{{"fig15", t}};
                 }});

  reg.push_back({"fig17", "impulsive-noise detection in a convolutional code versus impulse variance",
                 {{"variances", {1.0, 2.0, 5.0, 10.0}}, {"impulses", 2}, {"background", 0.01}, {"relax", 1.9},
                  {"iters", 300}, {"trials", 100}},
                 [](const json& p, std::uint64_t seed) {
                   ConvImpulseConfig c;
                   c.variances = json_list<double>(p, "variances");
                   c.impulses = p.at("impulses");
                   c.background = p.at("background");
                   c.relax = p.at("relax");
                   c.iters = p.at("iters");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   CsvTable t({"variance", "detected", "trials", "detection_rate", "mean_snr_db"});
                   for (const auto& r : conv_impulse_study(c))
                     t.row({format_double(r.variance), std::to_string(r.hits), std::to_string(r.trials),
                            format_double(r.rate), format_double(r.mean_snr_db)});
                   return std::vector<ExperimentOutput>{{"fig17", t}};
                 }});

  reg.push_back({"fig18", "MUSIC pseudospectrum and MUSIC/Pisarenko/Prony frequency errors at 5 dB",
                 {{"tones", {0.1, 0.2, 0.3, 0.4}}, {"snr_db", 5.0}, {"samples", 1024}, {"covariance_order", 16},
                  {"grid_points", 2048}, {"trials", 100}},
                 [](const json& p, std::uint64_t seed) {
                   SpectralStudyConfig c;
                   c.tones = json_list<double>(p, "tones");
                   c.snr_db = p.at("snr_db");
                   c.samples = p.at("samples");
                   c.covariance_order = p.at("covariance_order");
                   c.grid_points = p.at("grid_points");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   SpectralExample ex;
                   const auto trials = spectral_study(c, &ex);
                   CsvTable spec({"frequency", "music_db", "periodogram_db"});
                   for (std::size_t i = 0; i < ex.grid.size(); ++i)
                     spec.row({format_double(ex.grid[i]), format_double(ex.music_db[i]), format_double(ex.periodogram_db[i])});
                   CsvTable err({"trial", "music", "pisarenko", "prony", "music_within_bin"});
                   for (std::size_t i = 0; i < trials.size(); ++i)
                     err.row({std::to_string(i), format_double(trials[i].music), format_double(trials[i].pisarenko),
                              format_double(trials[i].prony), trials[i].music_within_bin ? "1" : "0"});
                   return std::vector<ExperimentOutput>{{"fig18", spec}, {"fig18_errors", err}};
                 }});

  reg.push_back({"fig20", "MDL source enumeration for two sources on a 6-sensor ULA",
                 {{"sensors", 6}, {"doas_deg", {20.0, 25.0}}, {"snapshots", 1000}, {"snr_db", {-10.0, -5.0, 0.0, 5.0, 10.0}},
                  {"trials", 100}},
                 [](const json& p, std::uint64_t seed) {
                   MdlStudyConfig c;
                   c.sensors = p.at("sensors");
                   c.doas_deg = json_list<double>(p, "doas_deg");
                   c.snapshots = p.at("snapshots");
                   c.snr_db = json_list<double>(p, "snr_db");
                   c.trials = p.at("trials");
                   c.seed = seed;
                   MdlReport ex;
                   const auto rows = mdl_study(c, &ex);
                   CsvTable rates({"snr_db", "under_rate", "exact_rate", "over_rate", "trials"});
                   for (const auto& r : rows) {
                     const auto n = static_cast<double>(r.trials);
                     rates.row({format_double(r.snr_db), format_double(r.under / n), format_double(r.exact / n),
                                format_double(r.over / n), std::to_string(r.trials)});
                   }
                   CsvTable crit({"k", "criterion", "kappa"});
                   for (std::size_t k = 0; k < ex.criterion.size(); ++k)
                     crit.row({std::to_string(k), format_double(ex.criterion[k]), format_double(ex.kappa[k])});
                   return std::vector<ExperimentOutput>{{"fig20", rates}, {"fig20_criterion", crit}};
                 }});

  reg.push_back({"fig31", "sparse component analysis accuracy versus noise level (Bernoulli-Gaussian sources)",
                 {{"n_values", {40}}, {"noise_values", {0.0, 0.01, 0.05, 0.1, 0.2}},
                  {"solvers", {"omp", "bp", "focuss", "ide", "sl0"}}, {"p", 0.1}, {"sigma_on", 1.0}, {"sigma_off", 0.01},
                  {"trials", 20}},
                 [](const json& p, std::uint64_t seed) {
                   const auto rows = summarize_sca(run_sca_benchmark(sca_config(p, seed)));
                   return std::vector<ExperimentOutput>{{"fig31", summary_table(rows, false, false)},
                                                        {"fig31_timing", summary_table(rows, false, true), false}};
                 }});

  reg.push_back({"fig32", "sparse component analysis run time versus number of sources",
                 {{"n_values", {20, 40, 80, 160}}, {"noise_values", {0.0}}, {"solvers", {"omp", "bp", "focuss", "ide", "sl0"}},
                  {"p", 0.1}, {"sigma_on", 1.0}, {"sigma_off", 0.01}, {"trials", 10}},
                 [](const json& p, std::uint64_t seed) {
                   const auto rows = summarize_sca(run_sca_benchmark(sca_config(p, seed)));
                   return std::vector<ExperimentOutput>{{"fig32_accuracy", summary_table(rows, true, false)},
                                                        {"fig32", summary_table(rows, true, true), false}};
                 }});

  reg.push_back({"fig39", "OFDM symbol error rate versus CNR: ideal, linear-interpolation and MIMAT channel estimates",
                 {{"cnr_db", {15.0, 17.5, 20.0, 22.5, 25.0, 27.5, 30.0}}, {"equalizer", "zf"}, {"mimat_alpha", 0.5},
                  {"mimat_max_iters", 10}, {"trials", 200}},
                 [](const json& p, std::uint64_t seed) {
                   return std::vector<ExperimentOutput>{{"fig39", ser_table(ofdm_ser_sweep(ofdm_config(p, seed)))}};
                 }});

  reg.push_back({"fig40", "MIMAT symbol error rate versus CNR under tap drift at several Doppler rates",
                 {{"cnr_db", {15.0, 20.0, 25.0, 30.0}}, {"doppler", {0.0, 0.02, 0.05, 0.1, 0.2}}, {"equalizer", "zf"},
                  {"mimat_alpha", 0.5}, {"mimat_max_iters", 10}, {"trials", 200}},
                 [](const json& p, std::uint64_t seed) {
                   CsvTable t({"normalized_doppler", "cnr_db", "estimator", "ser", "ci_halfwidth", "seed_count"});
                   for (const auto& r : doppler_study(ofdm_config(p, seed), json_list<double>(p, "doppler")))
                     t.row({format_double(r.normalized_doppler), format_double(r.ser.cnr_db), r.ser.estimator,
                            format_double(r.ser.ser), format_double(r.ser.ci_halfwidth), std::to_string(r.ser.blocks)});
                   return std::vector<ExperimentOutput>{{"fig40", t}};
                 }});
  return reg;
}

inline bool same_kind(const json& want, const json& got) {
  // Integer defaults here are all counts or sizes, so negatives are rejected too.
  if (want.is_number_integer()) return got.is_number_integer() && (want < 0 || got >= 0);
  if (want.is_number_float()) return got.is_number();
  if (want.is_array()) {
    if (!got.is_array()) return false;
    if (want.empty()) return true;
    for (const auto& g : got)
      if (!same_kind(want.front(), g)) return false;
    return true;
  }
  return want.type() == got.type();
}

}  // namespace detail

inline const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = detail::build_registry();
  return reg;
}

inline const ExperimentInfo& find_experiment(const std::string& id) {
  for (const auto& e : experiment_registry())
    if (e.id == id) return e;
  throw Error(errc::usage, "unknown experiment '" + id + "' (see `sparsekit list`)");
}

// Defaults merged with overrides; every override must name a default key and match its type.
inline json resolve_config(const ExperimentSpec& spec) {
  const auto& info = find_experiment(spec.id);
  json cfg = info.defaults;
  require(spec.overrides.is_object(), errc::usage, "overrides must be a key-value object");
  for (const auto& [key, value] : spec.overrides.items()) {
    require(cfg.contains(key), errc::usage, spec.id + ": unknown parameter '" + key + "'");
    require(detail::same_kind(cfg[key], value), errc::usage,
            spec.id + ": parameter '" + key + "' expects " + std::string(cfg[key].type_name()) + " like " + cfg[key].dump() +
                ", got " + value.dump());
    cfg[key] = value;
  }
  if (spec.trials) {
    require(*spec.trials >= 1, errc::usage, "trial count must be positive");
    cfg["trials"] = *spec.trials;
  }
  return cfg;
}

// `key=value`; the value is read as JSON when it parses, otherwise as a plain string.
inline std::pair<std::string, json> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  require(eq != std::string::npos && eq > 0, errc::usage, "--set expects key=value, got '" + text + "'");
  const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RunManifest run_experiment(const ExperimentSpec& spec) {
  const auto& info = find_experiment(spec.id);
  RunManifest man;
  man.version = toolkit_version;
  man.experiment = spec.id;
  man.seed = spec.seed;
  man.config = resolve_config(spec);
  man.started = utc_timestamp();
  std::vector<ExperimentOutput> outputs;
  try {
    outputs = info.run(man.config, spec.seed);
  } catch (const Error& e) {
    throw Error(e.code(), spec.id + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::usage, spec.id + ": bad parameter value: " + e.what());
  }
  std::filesystem::create_directories(spec.out);
  for (const auto& o : outputs) {
    const std::string text = o.table.str();
    const std::string file = o.name + ".csv";
    std::ofstream f(spec.out / file, std::ios::binary);
    f << text;
    require(static_cast<bool>(f), errc::internal, "cannot write " + (spec.out / file).string());
    man.outputs.push_back({file, sha256_hex(text), o.table.rows().size(), o.deterministic});
  }
  man.finished = utc_timestamp();
  std::ofstream m(spec.out / (spec.id + ".manifest.json"));
  m << man.to_json().dump(2) << '\n';
  require(static_cast<bool>(m), errc::internal, "cannot write manifest");
  return man;
}

}  // namespace sparsekit
