// Copyright 2026 The ecloo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ecloo/data_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ecloo/error.hpp"

namespace ecloo {
namespace {

LoadedData parse(const std::string& text, const std::string& target = "y",
                 bool center = false) {
  std::istringstream in(text);
  return parse_csv(in, target, center);
}

// Runs `f`, expects a ParseError and returns it.
template <typename F>
ParseError parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a ParseError";
  return ParseError(Errc::ParseError, 0, 0, "none");
}

TEST(Synthetic, NoiselessEmptySupportGivesZeroTarget) {
  SynthConfig c;
  c.N = 50;
  c.rho0 = 0.0;
  c.sigma_n0_sq = 0.0;
  const SyntheticData d = gen_synthetic(c);
  EXPECT_EQ(d.train.y().lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_TRUE(d.truth.support.empty());
}

TEST(Synthetic, SeedDeterminesEverything) {
  SynthConfig c;
  c.N = 60;
  c.seed = 9;
  c.test_samples = 11;
  const SyntheticData a = gen_synthetic(c);
  const SyntheticData b = gen_synthetic(c);
  EXPECT_EQ(a.train.X(), b.train.X());
  EXPECT_EQ(a.train.y(), b.train.y());
  EXPECT_EQ(a.test->X(), b.test->X());
  EXPECT_EQ(a.truth.w0, b.truth.w0);
  std::ostringstream sa, sb;
  write_csv(sa, a.train);
  write_csv(sb, b.train);
  EXPECT_EQ(sa.str(), sb.str());
  c.seed = 10;
  EXPECT_NE(gen_synthetic(c).train.y(), a.train.y());
}

TEST(Synthetic, ShapesFollowConfig) {
  SynthConfig c;
  c.N = 41;
  c.alpha = 0.3;
  c.test_samples = 7;
  const SyntheticData d = gen_synthetic(c);
  EXPECT_EQ(d.train.features(), 41);
  EXPECT_EQ(d.train.samples(), 12);  // round(0.3 * 41)
  EXPECT_EQ(d.test->samples(), 7);
  EXPECT_EQ(d.test->features(), 41);
}

TEST(Synthetic, StatisticsAtDefaultSetting) {
  double support = 0.0;
  double norm = 0.0;
  double norm_sq = 0.0;
  double count = 0.0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) {
    SynthConfig c;  // N = 1000, alpha = 0.5, rho0 = 0.1
    c.seed = static_cast<std::uint64_t>(s);
    const SyntheticData d = gen_synthetic(c);
    const double frac = static_cast<double>(d.truth.support.size()) / 1000.0;
    EXPECT_NEAR(frac, 0.1, 0.03) << "seed " << s;
    support += frac;
    for (Index mu = 0; mu < d.train.samples(); ++mu) {
      const double v = d.train.X().col(mu).squaredNorm();
      norm += v;
      norm_sq += v * v;
      count += 1.0;
    }
  }
  EXPECT_NEAR(support / seeds, 0.1, 0.01);
  const double mean = norm / count;
  const double sd = std::sqrt(norm_sq / count - mean * mean);
  EXPECT_NEAR(mean, 1.0, 0.01);
  EXPECT_LT(sd, 0.08);  // chi-square with 1000 dof scaled by 1/1000
}

TEST(Synthetic, RejectsBadConfig) {
  SynthConfig c;
  c.N = 0;
  EXPECT_THROW(gen_synthetic(c), Error);
  c = SynthConfig{};
  c.rho0 = 1.5;
  EXPECT_THROW(gen_synthetic(c), Error);
  c = SynthConfig{};
  c.sigma_n0_sq = -1.0;
  EXPECT_THROW(gen_synthetic(c), Error);
}

TEST(Csv, CentersColumns) {
  const LoadedData d = parse("a,y\n1,5\n3,7\n", "y", true);
  EXPECT_EQ(d.dataset.features(), 1);
  EXPECT_EQ(d.dataset.samples(), 2);
  EXPECT_DOUBLE_EQ(d.dataset.X()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(d.dataset.X()(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.centering.feature_means[0], 2.0);
  EXPECT_DOUBLE_EQ(d.centering.target_mean, 6.0);
  EXPECT_DOUBLE_EQ(d.dataset.y()[0], -1.0);
  EXPECT_TRUE(d.centering.centered);
}

TEST(Csv, TargetMayBeAnyColumnAndCommentsAreSkipped) {
  const LoadedData d =
      parse("# produced by hand\nt,f1,f2\n\n1,2,3\n# mid comment\n4,5,6\n", "t");
  EXPECT_EQ(d.columns.target_name, "t");
  EXPECT_EQ(d.columns.feature_names, (std::vector<std::string>{"f1", "f2"}));
  EXPECT_EQ(d.dataset.y(), Eigen::Vector2d(1, 4));
  EXPECT_EQ(d.dataset.X()(1, 1), 6.0);
  EXPECT_FALSE(d.centering.centered);
}

TEST(Csv, WideTableCentersToMachinePrecision) {
  SynthConfig c;
  c.N = 276;
  c.alpha = 78.0 / 276.0;
  const SyntheticData d = gen_synthetic(c);
  Eigen::MatrixXd X = d.train.X();
  X.array() += 3.5;  // shift so centering has work to do
  std::ostringstream out;
  write_csv(out, Dataset(X, d.train.y()));
  const LoadedData back = parse(out.str(), "y", true);
  EXPECT_EQ(back.dataset.features(), 276);
  EXPECT_EQ(back.dataset.samples(), 78);
  EXPECT_LE(back.dataset.X().rowwise().mean().lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(std::abs(back.dataset.y().mean()), 1e-12);
}

TEST(Csv, RoundTripIsExact) {
  SynthConfig c;
  c.N = 30;
  c.seed = 2;
  const SyntheticData d = gen_synthetic(c);
  std::ostringstream out;
  write_csv(out, d.train, {"a comment"});
  const LoadedData back = parse(out.str());
  EXPECT_EQ(back.dataset.X(), d.train.X());
  EXPECT_EQ(back.dataset.y(), d.train.y());
}

TEST(Csv, RoundTripThroughFile) {
  const auto path = std::filesystem::temp_directory_path() / "ecloo_data_io_rt.csv";
  Eigen::MatrixXd X(2, 3);
  X << 1e-300, -0.1, 3.0, 7.25, 1e300, -2.5;
  const Dataset ds(X, Eigen::Vector3d(0.5, -0.25, 1.0 / 3.0));
  write_csv(path, ds, {}, Table{{"left", "right"}, "target"});
  const LoadedData back = load_csv(path, "target", false);
  std::filesystem::remove(path);
  EXPECT_EQ(back.dataset.X(), X);
  EXPECT_EQ(back.dataset.y(), ds.y());
  EXPECT_EQ(back.columns.feature_names[1], "right");
}

TEST(Csv, ErrorsCarryLocation) {
  {
    const ParseError e = parse_error([] { parse("a,y\n1,2\n3\n"); });
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_EQ(e.row(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  {
    const ParseError e = parse_error([] { parse("# c\na,b,y\n1,2,3\n4,x,6\n"); });
    EXPECT_EQ(e.code(), Errc::NonNumericCell);
    EXPECT_EQ(e.row(), 4u);
    EXPECT_EQ(e.column(), 2u);
  }
  {
    const ParseError e = parse_error([] { parse("a,y\n1,\n"); });
    EXPECT_EQ(e.code(), Errc::NonNumericCell);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_EQ(parse_error([] { parse("a,y\n1,inf\n"); }).code(),
            Errc::NonNumericCell);
  EXPECT_EQ(parse_error([] { parse(""); }).code(), Errc::ParseError);
  EXPECT_EQ(parse_error([] { parse("a,y\n"); }).code(), Errc::ParseError);
  EXPECT_EQ(parse_error([] { parse("y\n1\n"); }).code(), Errc::ParseError);
  EXPECT_EQ(parse_error([] { parse("y,a,y\n1,2,3\n"); }).code(),
            Errc::ParseError);
}

TEST(Csv, MissingTarget) {
  try {
    parse("a,b\n1,2\n", "y");
    FAIL() << "expected a throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingTarget);
  }
}

TEST(Csv, MissingFile) {
  try {
    load_csv("/nonexistent/ecloo.csv", "y", false);
    FAIL() << "expected a throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
}

TEST(Centering, IsIdempotent) {
  SynthConfig c;
  c.N = 20;
  const Dataset raw = gen_synthetic(c).train;
  const auto [once, r1] = center_dataset(raw);
  const auto [twice, r2] = center_dataset(once);
  EXPECT_LT((twice.X() - once.X()).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_LT(r2.feature_means.lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_LT(std::abs(r2.target_mean), 1e-15);
}

TEST(ErrorSummary, KnownCases) {
  SynthConfig c;
  c.N = 40;
  c.sigma_n0_sq = 0.0;
  c.test_samples = 10;
  const SyntheticData d = gen_synthetic(c);
  const ErrorSummary zero = error_summary(Eigen::VectorXd::Zero(40), d.train);
  EXPECT_DOUBLE_EQ(zero.eps, d.train.y().squaredNorm() / (2.0 * 20));
  EXPECT_FALSE(zero.eps_g.has_value());
  const ErrorSummary exact = error_summary(d.truth.w0, d.train, &*d.test);
  EXPECT_LT(exact.eps, 1e-28);
  EXPECT_LT(*exact.eps_g, 1e-28);
  try {
    error_summary(Eigen::VectorXd::Zero(3), d.train);
    FAIL() << "expected a throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

}  // namespace
}  // namespace ecloo
