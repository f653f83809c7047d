#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "paracycle/experiment.hpp"

using namespace paracycle;

namespace {

const char* kBase = R"(grid:
  counts: [16]
  extents: [[0.0, 1.0]]
boundary:
  default: neumann
fields:
  u:
    init: {preset: tophat, low: 0.0, high: 1.0, center: [0.5], half_width: 0.2}
operators:
  - name: d
    kind: scalar
    field: u
    nu: 1.0
    rho: 1.0
    scheme: rkg2
    ptl: dynamic
outer_dt: {euler_multiple: 20}
)";

int error_line(const std::string& text) {
  try {
    parse_experiment(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(ExperimentConfig, ParsesTheBaseDocument) {
  const auto cfg = parse_experiment(kBase);
  ASSERT_EQ(cfg.grid->dims(), 1);
  EXPECT_EQ(cfg.grid->size(0), 16);
  ASSERT_EQ(cfg.operators.size(), 1u);
  EXPECT_EQ(cfg.operators[0].scheme.kind, SchemeKind::rkg2);
  EXPECT_EQ(cfg.operators[0].ptl.mode, PtlMode::dynamic);
  EXPECT_TRUE(cfg.outer_dt.euler_multiple);
  EXPECT_EQ(cfg.outer_dt.value, 20.0);
  const Field& u = cfg.initial.at("u");
  EXPECT_EQ(u(0), 0.0);
  EXPECT_EQ(u(8), 1.0);
}

TEST(ExperimentConfig, ErrorsPointAtTheLine) {
  std::string unknown = kBase;
  unknown.replace(unknown.find("    rho: 1.0\n"), 13, "    rho: 1.0\n    bogus: 3\n");
  EXPECT_EQ(error_line(unknown), 15);

  std::string bad_preset = kBase;
  bad_preset.replace(bad_preset.find("preset: tophat"), 14, "preset: wobble");
  EXPECT_EQ(error_line(bad_preset), 8);

  std::string bad_scheme = kBase;
  bad_scheme.replace(bad_scheme.find("scheme: rkg2"), 12, "scheme: rk4");
  EXPECT_EQ(error_line(bad_scheme), 15);

  EXPECT_GT(error_line("grid: [1, 2\n"), 0);
}

TEST(ExperimentConfig, RandomPresetNeedsASeed) {
  std::string text = kBase;
  text.replace(text.find("{preset: tophat, low: 0.0, high: 1.0, center: [0.5], half_width: 0.2}"), 69,
               "{preset: random, low: 0.0, high: 1.0}");
  EXPECT_THROW(parse_experiment(text), ConfigError);
  const auto a = parse_experiment(text + "seed: 42\n");
  const auto b = parse_experiment(text + "seed: 42\n");
  const auto c = parse_experiment(text + "seed: 43\n");
  EXPECT_EQ((a.initial.at("u").values() - b.initial.at("u").values()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((a.initial.at("u").values() - c.initial.at("u").values()).cwiseAbs().maxCoeff(), 0.0);
  const double lo = a.initial.at("u").values().minCoeff(), hi = a.initial.at("u").values().maxCoeff();
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
}

TEST(ExperimentConfig, FieldPresets) {
  const auto cfg = parse_experiment(R"(grid:
  counts: [5, 3]
  extents: [[0.0, 1.0], [0.0, 1.0]]
fields:
  c: 2.5
  s: {init: {preset: step, low: -1.0, high: 1.0, position: 0.5, normal: [1, 0]}}
  g: {init: {preset: gaussian, amplitude: 2.0, background: 1.0, center: [0.5, 0.5], sigma: 0.25}}
  w: {init: {preset: sinusoid, amplitude: 1.0, background: 0.0, modes: [1, 0]}}
  v: {components: 2, init: 0.5}
operators: []
outer_dt: 0.1
)");
  EXPECT_EQ(cfg.initial.at("c").values().minCoeff(), 2.5);
  EXPECT_EQ(cfg.initial.at("s")(0), -1.0);
  EXPECT_EQ(cfg.initial.at("s")(4), 1.0);
  const Index centre = cfg.grid->linear_index({2, 1, 0});
  EXPECT_NEAR(cfg.initial.at("g")(centre), 3.0, 1e-15);
  EXPECT_EQ(cfg.initial.at("v").components(), 2);
  EXPECT_NEAR(cfg.initial.at("w")(0), 0.0, 1e-15);
}

TEST(Experiment, NoOperatorsLeavesTheStateUnchanged) {
  const auto cfg = parse_experiment(R"(grid:
  counts: [6]
  extents: [[0.0, 1.0]]
seed: 3
fields:
  u: {init: {preset: random, low: -1.0, high: 1.0}}
operators: []
outer_dt: 0.5
n_outer_steps: 4
)");
  const auto r = run_experiment(cfg);
  EXPECT_EQ((r.state.at("u").values() - cfg.initial.at("u").values()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(r.reports.empty());
}

TEST(Experiment, RunCoversEveryOuterStep) {
  auto cfg = parse_experiment(std::string(kBase) + "n_outer_steps: 3\n");
  const auto r = run_experiment(cfg);
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_NEAR(r.reports[0].total_dt(), 3 * r.outer_dt, 1e-12 * 3 * r.outer_dt);
  EXPECT_EQ(r.reports[0].cycles.back().outer_step, 2);

  const auto dir = std::filesystem::temp_directory_path() / "paracycle_experiment_test";
  std::filesystem::remove_all(dir);
  write_experiment_outputs(r, dir.string());
  for (const char* f : {"u_final.csv", "coords.csv", "report_d.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream rep(dir / "report_d.csv");
  std::string header;
  std::getline(rep, header);
  EXPECT_EQ(header, "outer_step,cycle,dt,ptl_raw,limited,iters");
  std::filesystem::remove_all(dir);
}
