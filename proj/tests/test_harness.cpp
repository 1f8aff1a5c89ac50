#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "sparsekit/harness/registry.hpp"

using namespace sparsekit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sparsekit_harness_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string header_of(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

// Small-but-real settings so every experiment runs in well under a second or two.
json quick_overrides(const std::string& id) {
  if (id == "fig4") return {{"n", 128}, {"band_lo", 12}, {"band_width", 8}};
  if (id == "fig6") return {{"n", 128}, {"k", 4}, {"m", 24}};
  if (id == "fig7") return {{"n", 128}, {"ks", {2, 4}}};
  if (id == "fig10") return json::object();
  if (id == "fig15") return {{"rates", {0.2, 0.6}}};
  if (id == "fig17") return {{"variances", {1.0, 10.0}}, {"iters", 100}};
  if (id == "fig18") return {{"samples", 256}, {"grid_points", 512}};
  if (id == "fig20") return {{"snr_db", {0.0, 10.0}}, {"snapshots", 200}};
  if (id == "fig31") return {{"n_values", {20}}, {"noise_values", {0.0, 0.1}}};
  if (id == "fig32") return {{"n_values", {20, 40}}};
  if (id == "fig39") return {{"cnr_db", {20.0, 25.0}}};
  if (id == "fig40") return {{"cnr_db", {25.0}}, {"doppler", {0.0, 0.1}}};
  return json::object();
}

const std::map<std::string, std::string> kSchemas = {
    {"fig4.csv", "trial,condition,plain_iters,chebyshev_iters,cg_iters,fixed_point_gap"},
    {"fig4_trace.csv", "iteration,plain_snr_db,chebyshev_snr_db,cg_snr_db"},
    {"fig6.csv", "iteration,mean_snr_db"},
    {"fig6_trials.csv", "trial,iterations,peak_snr_db,settle_iteration,support_ok"},
    {"fig7.csv", "k,m_min,law_c1,ratio,rate_at_m_min"},
    {"fig10.csv", "pattern,erasures,trial,snr_db"},
    {"fig10_samples.csv", "index,original,received,recovered"},
    {"fig15.csv", "erasure_rate,erasures,mean_snr_db"},
    {"fig17.csv", "variance,detected,trials,detection_rate,mean_snr_db"},
    {"fig18.csv", "frequency,music_db,periodogram_db"},
    {"fig18_errors.csv", "trial,music,pisarenko,prony,music_within_bin"},
    {"fig20.csv", "snr_db,under_rate,exact_rate,over_rate,trials"},
    {"fig20_criterion.csv", "k,criterion,kappa"},
    {"fig31.csv", "solver,sigma_noise,trials,support_ok_rate,mean_mse"},
    {"fig31_timing.csv", "solver,sigma_noise,trials,mean_seconds"},
    {"fig32.csv", "solver,n,trials,mean_seconds"},
    {"fig32_accuracy.csv", "solver,n,trials,support_ok_rate,mean_mse"},
    {"fig39.csv", "cnr_db,estimator,ser,ci_halfwidth,seed_count"},
    {"fig40.csv", "normalized_doppler,cnr_db,estimator,ser,ci_halfwidth,seed_count"},
};

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Registry, ContainsEveryExperiment) {
  std::set<std::string> ids;
  for (const auto& e : experiment_registry()) ids.insert(e.id);
  const std::set<std::string> want{"fig4",  "fig6",  "fig7",  "fig10", "fig15", "fig17",
                                   "fig18", "fig20", "fig31", "fig32", "fig39", "fig40"};
  EXPECT_EQ(ids, want);
  EXPECT_NE(find_experiment("fig10").description.find("burst erasure recovery"), std::string::npos);
  EXPECT_NE(find_experiment("fig39").description.find("MIMAT"), std::string::npos);
  EXPECT_NE(find_experiment("fig39").description.find("CNR"), std::string::npos);
}

TEST(Registry, EveryIdRoundTripsThroughTheValidator) {
  for (const auto& e : experiment_registry()) {
    ExperimentSpec spec;
    spec.id = e.id;
    EXPECT_EQ(resolve_config(spec), e.defaults) << e.id;
    spec.overrides = e.defaults;  // every default re-supplied as an override
    EXPECT_EQ(resolve_config(spec), e.defaults) << e.id;
    ASSERT_TRUE(e.defaults.contains("trials")) << e.id;
    spec.trials = 3;
    EXPECT_EQ(resolve_config(spec).at("trials"), 3) << e.id;
  }
}

TEST(Registry, OverridesAreTypeChecked) {
  ExperimentSpec spec;
  spec.id = "fig7";
  spec.overrides = {{"n", 512}};
  EXPECT_EQ(resolve_config(spec).at("n"), 512);
  auto usage = [&](json o) {
    spec.overrides = std::move(o);
    try {
      resolve_config(spec);
    } catch (const Error& e) {
      return e.code() == errc::usage;
    }
    return false;
  };
  EXPECT_TRUE(usage({{"nn", 512}}));
  EXPECT_TRUE(usage({{"n", "512"}}));
  EXPECT_TRUE(usage({{"n", 512.5}}));
  EXPECT_TRUE(usage({{"n", -4}}));
  EXPECT_TRUE(usage({{"ks", {4, 8.5}}}));
  EXPECT_TRUE(usage({{"ks", 4}}));
  EXPECT_FALSE(usage({{"success_rate", 1}}));  // integer literal where a real is expected is fine
  spec.id = "fig99";
  EXPECT_TRUE(usage(json::object()));
}

TEST(Registry, AssignmentParsing) {
  auto [k1, v1] = parse_assignment("n=512");
  EXPECT_EQ(k1, "n");
  EXPECT_TRUE(v1.is_number_integer());
  auto [k2, v2] = parse_assignment("equalizer=mmse");
  EXPECT_EQ(v2, "mmse");
  auto [k3, v3] = parse_assignment("ks=[2,4]");
  EXPECT_EQ(v3, json({2, 4}));
  auto [k4, v4] = parse_assignment("osr=1.5");
  EXPECT_DOUBLE_EQ(v4.get<double>(), 1.5);
  EXPECT_THROW(parse_assignment("novalue"), Error);
  EXPECT_THROW(parse_assignment("=3"), Error);
}

TEST(Harness, EveryExperimentReproducesByteForByte) {
  for (const auto& e : experiment_registry()) {
    ExperimentSpec spec;
    spec.id = e.id;
    spec.seed = 11;
    spec.trials = 2;
    spec.overrides = quick_overrides(e.id);
    const fs::path dir_a = scratch(e.id + "_a"), dir_b = scratch(e.id + "_b");
    spec.out = dir_a;
    const auto a = run_experiment(spec);
    spec.out = dir_b;
    const auto b = run_experiment(spec);
    ASSERT_EQ(a.outputs.size(), b.outputs.size()) << e.id;
    EXPECT_EQ(a.config, b.config);
    bool any_deterministic = false;
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
      const auto& o = a.outputs[i];
      ASSERT_TRUE(kSchemas.count(o.file)) << o.file;
      EXPECT_EQ(header_of(dir_a / o.file), kSchemas.at(o.file)) << o.file;
      EXPECT_GT(o.rows, 0u) << o.file;
      EXPECT_EQ(sha256_hex(slurp(dir_b / o.file)), b.outputs[i].sha256) << o.file;
      if (o.deterministic) {
        any_deterministic = true;
        EXPECT_EQ(o.sha256, b.outputs[i].sha256) << o.file;
        EXPECT_EQ(slurp(dir_a / o.file), slurp(dir_b / o.file)) << o.file;
      }
    }
    EXPECT_TRUE(any_deterministic) << e.id;
    const json man = json::parse(slurp(dir_b / (e.id + ".manifest.json")));
    EXPECT_EQ(man.at("experiment"), e.id);
    EXPECT_EQ(man.at("seed"), 11);
    EXPECT_EQ(man.at("config").at("trials"), 2);
    EXPECT_EQ(man.at("outputs").size(), a.outputs.size());
    EXPECT_EQ(man.at("version"), toolkit_version);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
  }
}

TEST(Harness, DifferentSeedsChangeTheOutput) {
  ExperimentSpec spec;
  spec.id = "fig10";
  spec.trials = 2;
  spec.out = scratch("seed");
  const auto a = run_experiment(spec);
  spec.seed = 2;
  const auto b = run_experiment(spec);
  EXPECT_NE(a.outputs[0].sha256, b.outputs[0].sha256);
  fs::remove_all(spec.out);
}

TEST(Harness, Fig31RowCountIsSolversTimesNoiseGrid) {
  ExperimentSpec spec;
  spec.id = "fig31";
  spec.trials = 3;
  spec.overrides = {{"n_values", {20}}};
  spec.out = scratch("fig31");
  const auto man = run_experiment(spec);
  const auto& d = find_experiment("fig31").defaults;
  ASSERT_EQ(man.outputs.size(), 2u);
  EXPECT_EQ(man.outputs[0].rows, d.at("solvers").size() * d.at("noise_values").size());
  EXPECT_TRUE(man.outputs[0].deterministic);
  EXPECT_FALSE(man.outputs[1].deterministic);
  fs::remove_all(spec.out);
}

TEST(Harness, ModuleFailuresCarryTheExperimentId) {
  ExperimentSpec spec;
  spec.id = "fig10";
  spec.overrides = {{"burst_length", 20}};
  spec.out = scratch("fail");
  try {
    run_experiment(spec);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::invalid_argument);
    EXPECT_NE(std::string(e.what()).find("fig10"), std::string::npos);
  }
  fs::remove_all(spec.out);
}
