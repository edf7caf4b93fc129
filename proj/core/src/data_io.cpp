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

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ecloo/error.hpp"
#include "ecloo/report_io.hpp"
#include "ecloo/rng.hpp"

namespace ecloo {

Index SynthConfig::samples() const {
  return static_cast<Index>(std::llround(alpha * static_cast<double>(N)));
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(Errc::ConfigError, what);
  };
  if (N < 1) fail("N must be at least 1");
  if (!std::isfinite(alpha) || alpha <= 0.0) fail("alpha must be positive");
  if (samples() < 1) fail("round(alpha * N) must be at least 1");
  if (!(rho0 >= 0.0 && rho0 <= 1.0)) fail("rho0 must lie in [0, 1]");
  if (!std::isfinite(sigma_w0_sq) || sigma_w0_sq <= 0.0) {
    fail("sigma_w0_sq must be positive");
  }
  if (!std::isfinite(sigma_n0_sq) || sigma_n0_sq < 0.0) {
    fail("sigma_n0_sq must be non-negative");
  }
  if (test_samples < 0) fail("test_samples must be non-negative");
}

namespace {

Eigen::MatrixXd draw_design(Index n, Index m, std::uint64_t seed,
                            std::uint64_t stream) {
  CounterRng rng(seed, stream);
  boost::random::normal_distribution<double> dist(
      0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::MatrixXd X(n, m);
  for (Index mu = 0; mu < m; ++mu) {
    for (Index i = 0; i < n; ++i) X(i, mu) = dist(rng);
  }
  return X;
}

Eigen::VectorXd draw_response(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& w0, double noise_var,
                              std::uint64_t seed, std::uint64_t stream) {
  Eigen::VectorXd y = X.transpose() * w0;
  if (noise_var > 0.0) {
    CounterRng rng(seed, stream);
    boost::random::normal_distribution<double> noise(0.0,
                                                     std::sqrt(noise_var));
    for (Index mu = 0; mu < y.size(); ++mu) y[mu] += noise(rng);
  }
  return y;
}

}  // namespace

SyntheticData gen_synthetic(const SynthConfig& config) {
  config.validate();
  const Index n = config.N;
  const Index m = config.samples();

  GroundTruth truth;
  truth.w0 = Eigen::VectorXd::Zero(n);
  {
    CounterRng support_rng(config.seed, streams::kSupport);
    CounterRng coef_rng(config.seed, streams::kCoefficients);
    boost::random::bernoulli_distribution<double> in_support(config.rho0);
    boost::random::normal_distribution<double> coef(
        0.0, std::sqrt(config.sigma_w0_sq));
    for (Index i = 0; i < n; ++i) {
      const bool on = in_support(support_rng);
      const double value = coef(coef_rng);
      if (on) {
        truth.w0[i] = value;
        truth.support.push_back(i);
      }
    }
  }

  Eigen::MatrixXd X = draw_design(n, m, config.seed, streams::kDesign);
  Eigen::VectorXd y = draw_response(X, truth.w0, config.sigma_n0_sq,
                                    config.seed, streams::kNoise);
  std::optional<Dataset> test;
  if (config.test_samples > 0) {
    Eigen::MatrixXd Xt = draw_design(n, config.test_samples, config.seed,
                                     streams::kHeldOutDesign);
    Eigen::VectorXd yt = draw_response(Xt, truth.w0, config.sigma_n0_sq,
                                       config.seed, streams::kHeldOutNoise);
    test.emplace(std::move(Xt), std::move(yt));
  }
  return SyntheticData{Dataset(std::move(X), std::move(y)), std::move(truth),
                       std::move(test)};
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

bool skippable(std::string_view line) {
  const std::string_view t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

LoadedData parse_csv(std::istream& in, const std::string& target_column,
                     bool center) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (skippable(line)) continue;
    for (std::string_view cell : split(line)) header.push_back(unquote(cell));
    break;
  }
  if (header.empty()) {
    throw ParseError(Errc::ParseError, row + 1, 1, "missing header row");
  }
  std::size_t target = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target_column) {
      if (target != header.size()) {
        throw ParseError(Errc::ParseError, row, c + 1,
                         "duplicate target column '" + target_column + "'");
      }
      target = c;
    }
  }
  if (target == header.size()) {
    throw Error(Errc::MissingTarget,
                "no column named '" + target_column + "' in the header");
  }

  const std::size_t width = header.size();
  std::vector<double> cells;
  std::size_t samples = 0;
  while (std::getline(in, line)) {
    ++row;
    if (skippable(line)) continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      std::ostringstream os;
      os << "expected " << width << " fields, found " << fields.size();
      throw ParseError(Errc::ParseError, row, std::min(fields.size(), width) + 1,
                       os.str());
    }
    for (std::size_t c = 0; c < width; ++c) {
      const auto value = parse_double(fields[c]);
      if (!value || !std::isfinite(*value)) {
        throw ParseError(Errc::NonNumericCell, row, c + 1,
                         fields[c].empty()
                             ? std::string("empty cell")
                             : "'" + std::string(fields[c]) + "' is not a number");
      }
      cells.push_back(*value);
    }
    ++samples;
  }
  if (samples == 0) {
    throw ParseError(Errc::ParseError, row + 1, 1, "no data rows");
  }
  if (width < 2) {
    throw ParseError(Errc::ParseError, row, 1, "no feature columns");
  }

  const Index n = static_cast<Index>(width - 1);
  const Index m = static_cast<Index>(samples);
  Eigen::MatrixXd X(n, m);
  Eigen::VectorXd y(m);
  Table columns;
  columns.target_name = header[target];
  for (std::size_t c = 0; c < width; ++c) {
    if (c != target) columns.feature_names.push_back(header[c]);
  }
  for (Index mu = 0; mu < m; ++mu) {
    Index i = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = cells[static_cast<std::size_t>(mu) * width + c];
      if (c == target) {
        y[mu] = v;
      } else {
        X(i++, mu) = v;
      }
    }
  }
  Dataset raw(std::move(X), std::move(y));
  if (!center) {
    CenteringRecord none;
    none.feature_means = Eigen::VectorXd::Zero(n);
    return LoadedData{std::move(raw), std::move(none), std::move(columns)};
  }
  auto [centered, record] = center_dataset(raw);
  return LoadedData{std::move(centered), std::move(record), std::move(columns)};
}

LoadedData load_csv(const std::filesystem::path& path,
                    const std::string& target_column, bool center) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return parse_csv(in, target_column, center);
}

std::pair<Dataset, CenteringRecord> center_dataset(const Dataset& dataset) {
  CenteringRecord record;
  record.centered = true;
  record.feature_means = dataset.X().rowwise().mean();
  record.target_mean = dataset.y().mean();
  Eigen::MatrixXd X = dataset.X().colwise() - record.feature_means;
  Eigen::VectorXd y =
      dataset.y().array() - record.target_mean;
  return {Dataset(std::move(X), std::move(y)), std::move(record)};
}

void write_csv(std::ostream& out, const Dataset& dataset,
               const std::vector<std::string>& comments, const Table& columns) {
  const Index n = dataset.features();
  if (!columns.feature_names.empty() &&
      static_cast<Index>(columns.feature_names.size()) != n) {
    throw Error(Errc::DimensionMismatch,
                "feature name count does not match the dataset");
  }
  for (const std::string& c : comments) out << "# " << c << '\n';
  for (Index i = 0; i < n; ++i) {
    if (columns.feature_names.empty()) {
      out << 'x' << (i + 1);
    } else {
      out << columns.feature_names[static_cast<std::size_t>(i)];
    }
    out << ',';
  }
  out << (columns.target_name.empty() ? std::string("y") : columns.target_name)
      << '\n';
  for (Index mu = 0; mu < dataset.samples(); ++mu) {
    for (Index i = 0; i < n; ++i) {
      out << format_double(dataset.X()(i, mu)) << ',';
    }
    out << format_double(dataset.y()[mu]) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed");
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset,
               const std::vector<std::string>& comments, const Table& columns) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string());
  write_csv(out, dataset, comments, columns);
}

ErrorSummary error_summary(const Eigen::VectorXd& m, const Dataset& train,
                           const Dataset* test) {
  auto half_mse = [&m](const Dataset& d) {
    if (m.size() != d.features()) {
      throw Error(Errc::DimensionMismatch,
                  "estimate length does not match the feature count");
    }
    const Eigen::VectorXd r = d.y() - d.X().transpose() * m;
    return r.squaredNorm() / (2.0 * static_cast<double>(d.samples()));
  };
  ErrorSummary out;
  out.eps = half_mse(train);
  if (test != nullptr) out.eps_g = half_mse(*test);
  return out;
}

}  // namespace ecloo
