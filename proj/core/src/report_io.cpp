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

#include "ecloo/report_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ecloo/error.hpp"
#include "json.hpp"

namespace ecloo {

using Json = nlohmann::ordered_json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

void check_stream(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

namespace {

void write_comments(std::ostream& out, const std::vector<std::string>& lines) {
  for (const std::string& line : lines) out << "# " << line << '\n';
}

// JSON has no literal for nan or inf; those are written as strings.
Json scalar_json(double v) {
  return std::isfinite(v) ? Json(v) : Json(format_double(v));
}

Json vector_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(scalar_json(v[i]));
  return arr;
}

double number_from(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    if (auto v = parse_double(j.get<std::string>())) return *v;
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw Error(Errc::ParseError, "expected a number in the fit file");
}

Eigen::VectorXd vector_from(const Json& j) {
  if (!j.is_array()) throw Error(Errc::ParseError, "expected an array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = number_from(j[i]);
  }
  return v;
}

Json settings_json(const FitSettings& s) {
  return Json{{"grad_tol", s.grad_tol},     {"step_tol", s.step_tol},
              {"max_outer", s.max_outer},   {"min_step", s.min_step},
              {"armijo", s.armijo},         {"variance_floor", s.variance_floor},
              {"e_tol", s.e_tol},           {"max_inner", s.max_inner}};
}

FitSettings settings_from(const Json& j) {
  FitSettings s;
  s.grad_tol = j.at("grad_tol").get<double>();
  s.step_tol = j.at("step_tol").get<double>();
  s.max_outer = j.at("max_outer").get<int>();
  s.min_step = j.at("min_step").get<double>();
  s.armijo = j.at("armijo").get<double>();
  s.variance_floor = j.at("variance_floor").get<double>();
  s.e_tol = j.at("e_tol").get<double>();
  s.max_inner = j.at("max_inner").get<int>();
  return s;
}

std::string cell(double v) { return format_double(v); }

}  // namespace

FitRecord to_record(const FitResult& fit) {
  FitRecord r;
  r.m = fit.state.m;
  r.h = fit.state.h;
  r.Mi = fit.state.Mi;
  r.inclusion_probs = fit.inclusion_probs;
  r.E = fit.state.E;
  r.free_energy = fit.state.free_energy;
  r.converged = fit.state.converged;
  r.iterations = fit.state.iterations;
  r.beta = fit.beta;
  r.prior = fit.prior;
  r.settings = fit.settings;
  return r;
}

void write_fit_json(std::ostream& out, const FitResult& fit,
                    const std::vector<std::string>& comments) {
  Json prior{{"family", std::string(to_string(fit.prior.family))},
             {"rho", fit.prior.rho}};
  if (fit.prior.family == PriorFamily::BernoulliGauss) {
    prior["sigma_w2"] = fit.prior.sigma_w2;
  }
  Json settings = settings_json(fit.settings);
  settings["beta"] = fit.beta;
  settings["prior"] = std::move(prior);

  Json doc;
  doc["comments"] = comments;
  doc["settings"] = std::move(settings);
  doc["converged"] = fit.state.converged;
  doc["iterations"] = fit.state.iterations;
  doc["E"] = scalar_json(fit.state.E);
  doc["free_energy"] = scalar_json(fit.state.free_energy);
  doc["m"] = vector_json(fit.state.m);
  doc["h"] = vector_json(fit.state.h);
  doc["Mi"] = vector_json(fit.state.Mi);
  doc["inclusion_probs"] = vector_json(fit.inclusion_probs);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(Errc::IoError, "failed to write the fit file");
}

FitRecord read_fit_json(std::istream& in) {
  Json doc;
  try {
    doc = Json::parse(in);
    FitRecord r;
    const Json& settings = doc.at("settings");
    r.settings = settings_from(settings);
    r.beta = settings.at("beta").get<double>();
    const Json& prior = settings.at("prior");
    r.prior.family = parse_prior_family(prior.at("family").get<std::string>());
    r.prior.rho = prior.at("rho").get<double>();
    if (prior.contains("sigma_w2")) {
      r.prior.sigma_w2 = prior.at("sigma_w2").get<double>();
    }
    r.converged = doc.at("converged").get<bool>();
    r.iterations = doc.at("iterations").get<int>();
    r.E = number_from(doc.at("E"));
    r.free_energy = number_from(doc.at("free_energy"));
    r.m = vector_from(doc.at("m"));
    r.h = vector_from(doc.at("h"));
    r.Mi = vector_from(doc.at("Mi"));
    r.inclusion_probs = vector_from(doc.at("inclusion_probs"));
    return r;
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("malformed fit file: ") + e.what());
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result,
                     const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << "# family: " << to_string(result.family) << '\n';
  if (result.best) {
    const SweepPoint& b = result.points[*result.best];
    out << "# argmin eps_loo: beta=" << cell(b.beta) << " rho=" << cell(b.rho)
        << " sigma_w2=" << cell(b.sigma_w2) << '\n';
  }
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const SweepPoint& p = result.points[i];
    if (!p.failure.empty()) {
      out << "# row " << (i + 1) << " failed: " << p.failure << '\n';
    }
  }
  out << kSweepColumns << '\n';
  for (const SweepPoint& p : result.points) {
    out << cell(p.beta) << ',' << cell(p.rho) << ',' << cell(p.sigma_w2) << ','
        << cell(p.eps) << ',' << cell(p.eps_loo) << ',' << cell(p.free_energy)
        << ',' << (p.converged ? 1 : 0) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "failed to write the sweep table");
}

std::vector<SweepPoint> read_sweep_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  std::vector<SweepPoint> points;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line != kSweepColumns) {
        throw ParseError(Errc::ParseError, row, 1, "unexpected sweep header");
      }
      have_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 7) {
      throw ParseError(Errc::ParseError, row, 1, "expected 7 fields");
    }
    double v[6];
    for (std::size_t c = 0; c < 6; ++c) {
      const auto parsed = parse_double(fields[c]);
      if (!parsed) {
        throw ParseError(Errc::NonNumericCell, row, c + 1, fields[c]);
      }
      v[c] = *parsed;
    }
    if (fields[6] != "0" && fields[6] != "1") {
      throw ParseError(Errc::ParseError, row, 7, "converged must be 0 or 1");
    }
    points.push_back(SweepPoint{v[0], v[1], v[2], v[3], v[4], v[5],
                                fields[6] == "1", {}});
  }
  if (!have_header) {
    throw ParseError(Errc::ParseError, row + 1, 1, "missing sweep header");
  }
  return points;
}

void write_loo_csv(std::ostream& out, const LooReport& approx,
                   const LooReport* literal, const LooReport* kfold,
                   const std::vector<std::string>& comments) {
  auto check = [&](const LooReport* r) {
    if (r != nullptr && r->samples.size() != approx.samples.size()) {
      throw Error(Errc::DimensionMismatch, "LOO reports differ in length");
    }
  };
  check(literal);
  check(kfold);
  write_comments(out, comments);
  out << "# eps_loo " << describe(approx) << ": " << cell(approx.eps_loo)
      << '\n';
  for (const LooReport* r : {literal, kfold}) {
    if (r == nullptr) continue;
    out << "# eps_loo " << describe(*r) << ": " << cell(r->eps_loo) << '\n';
    if (r == literal && approx.eps_loo == approx.eps_loo &&
        r->eps_loo > 0.0) {
      out << "# relative difference approx vs literal: "
          << cell(std::abs(approx.eps_loo - r->eps_loo) / r->eps_loo) << '\n';
    }
  }
  out << kLooColumns;
  if (literal != nullptr) out << ",residual_loo_literal";
  if (kfold != nullptr) out << ",residual_kfold";
  out << '\n';
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < approx.samples.size(); ++i) {
    const LooSample& s = approx.samples[i];
    out << s.index << ',' << cell(s.residual_full) << ',' << cell(s.leverage)
        << ',' << cell(s.residual_loo_approx) << ',' << (s.flagged ? 1 : 0);
    for (const LooReport* r : {literal, kfold}) {
      if (r == nullptr) continue;
      out << ',' << cell(r->samples[i].residual_loo_literal.value_or(kNaN));
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::IoError, "failed to write the LOO table");
}

void write_calibration_csv(std::ostream& out,
                           const std::vector<CalibrationRow>& rows,
                           const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << kCalibrationColumns << '\n';
  for (const CalibrationRow& r : rows) {
    out << cell(r.K) << ',' << cell(r.rho) << ',' << cell(r.achieved_K) << ','
        << cell(r.beta) << ',' << cell(r.eps_loo_approx) << ','
        << (r.eps_loo_literal ? cell(*r.eps_loo_literal) : std::string("nan"))
        << ',' << cell(r.eps) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "failed to write the calibration table");
}

}  // namespace ecloo
