/* Copyright 2026 The Hubless Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hubless/losses.hpp"

#include <cmath>
#include <map>
#include <string>

#include "hubless/error.hpp"
#include "hubless/kernels.hpp"
#include "hubless/simd/dispatch.hpp"

namespace hubless {

void TrainConfig::Validate() const {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kConfigError, "alpha must be >= 0");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kConfigError, "lambda must be >= 0");
  if (!(tau > 0.0)) throw Error(ErrorCode::kConfigError, "tau must be > 0");
  if (!(lr >= 0.0)) throw Error(ErrorCode::kConfigError, "lr must be >= 0");
  if (batch_size < 2) throw Error(ErrorCode::kConfigError, "batch size must be >= 2");
  if (hidden.empty()) throw Error(ErrorCode::kConfigError, "at least one hidden layer is required");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{
      {"alpha", c.alpha},
      {"lambda", c.lambda},
      {"batch_size", c.batch_size},
      {"tau", c.tau},
      {"lr", c.lr},
      {"epochs", c.epochs},
      {"seed", c.seed},
      {"final_relu", c.final_relu},
      {"normalize_features", c.normalize_features},
      {"skew_sum", c.skew_sum == SkewSum::kInstances ? "instances" : "classes"},
      {"hidden", c.hidden},
      {"direction", DirectionName(c.direction)},
  };
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.alpha = j.value("alpha", d.alpha);
  c.lambda = j.value("lambda", d.lambda);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.tau = j.value("tau", d.tau);
  c.lr = j.value("lr", d.lr);
  c.epochs = j.value("epochs", d.epochs);
  c.seed = j.value("seed", d.seed);
  c.final_relu = j.value("final_relu", d.final_relu);
  c.normalize_features = j.value("normalize_features", d.normalize_features);
  const std::string sum = j.value("skew_sum", std::string("instances"));
  if (sum != "instances" && sum != "classes") {
    throw Error(ErrorCode::kFormatError, "unknown skew_sum '" + sum + "'");
  }
  c.skew_sum = sum == "instances" ? SkewSum::kInstances : SkewSum::kClasses;
  c.hidden = j.value("hidden", d.hidden);
  c.direction = ParseDirection(j.value("direction", std::string("sem2feat")));
}

namespace {

struct AlignTerms {
  double distance = 0.0;  // mean squared distance, no regularizer
  double skewness = 0.0;
  Matrix dq;
  Matrix dr;
  BatchHistogram soft;
  BatchHistogram hard;
};

struct AlignOptions {
  double alpha = 0.0;
  double tau = 1.0;
  SkewSum skew_sum = SkewSum::kInstances;
  bool histograms = false;
  // Training only: a row the final ReLU has zeroed gets cosine 0 and passes
  // no cosine gradient instead of aborting the run.
  bool allow_zero_rows = false;
};

void RequireRowNorms(const Matrix& m, Vector& norms, const char* what, bool allow_zero = false) {
  const auto& k = simd::Active();
  norms.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    norms[i] = std::sqrt(k.dot(m.row(i).data(), m.row(i).data(), m.cols()));
    if (!(norms[i] > 0.0) && !(allow_zero && norms[i] == 0.0)) {
      throw Error(ErrorCode::kDegenerateVector, std::string("zero-norm ") + what + " " +
                                                    std::to_string(i));
    }
  }
}

// Rows of q are instances, rows of r are classes; labels[i] indexes r.
// Returns the mean squared distance between q_i and r_{labels[i]}, and with
// histograms set, the soft and hard prediction histograms plus the skewness
// term. dq and dr hold the gradient of distance + alpha * skewness.
AlignTerms Align(const Matrix& q, const Matrix& r, std::span<const std::size_t> labels,
                 const AlignOptions& opt) {
  const std::size_t n = q.rows();
  const std::size_t p = r.rows();
  const std::size_t dim = q.cols();
  const auto& k = simd::Active();
  AlignTerms t;
  t.dq = Matrix(n, dim);
  t.dr = Matrix(p, dim);

  const double scale = 2.0 / static_cast<double>(n);
  Vector diff(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = q.row(i);
    const auto ri = r.row(labels[i]);
    for (std::size_t c = 0; c < dim; ++c) diff[c] = qi[c] - ri[c];
    t.distance += k.dot(diff.data(), diff.data(), dim);
    k.axpy(scale, diff.data(), t.dq.row(i).data(), dim);
    k.axpy(-scale, diff.data(), t.dr.row(labels[i]).data(), dim);
  }
  t.distance /= static_cast<double>(n);
  if (!opt.histograms) return t;

  Vector qn, rn;
  RequireRowNorms(q, qn, "query", opt.allow_zero_rows);
  RequireRowNorms(r, rn, "prototype", opt.allow_zero_rows);
  Matrix cos(n, p);
  Matrix prob(n, p);
  t.soft.counts.assign(p, 0.0);
  t.soft.total = static_cast<double>(n);
  t.hard.counts.assign(p, 0.0);
  t.hard.total = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 0; c < p; ++c) {
      const double denom = qn[i] * rn[c];
      cos(i, c) = denom > 0.0 ? k.dot(q.row(i).data(), r.row(c).data(), dim) / denom : 0.0;
      if (cos(i, c) > cos(i, best)) best = c;
    }
    t.hard.counts[best] += 1.0;
    const Vector pi = Softmax(cos.row(i), opt.tau);
    for (std::size_t c = 0; c < p; ++c) {
      prob(i, c) = pi[c];
      t.soft.counts[c] += pi[c];
    }
  }
  if (opt.alpha == 0.0) return t;

  const SkewnessLoss sk = ComputeSkewnessLoss(t.soft, opt.skew_sum);
  t.skewness = sk.loss;
  // d(alpha * L_U)/d cos_ic through the softmax rows.
  Matrix dcos(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_g = 0.0;
    for (std::size_t c = 0; c < p; ++c) mean_g += prob(i, c) * sk.gradient[c];
    for (std::size_t c = 0; c < p; ++c) {
      dcos(i, c) = opt.alpha * prob(i, c) * (sk.gradient[c] - mean_g) / opt.tau;
    }
  }
  // d cos(a, b)/da = (b/|b| - cos * a/|a|) / |a|
  for (std::size_t i = 0; i < n; ++i) {
    const double* qi = q.row(i).data();
    double* dqi = t.dq.row(i).data();
    for (std::size_t c = 0; c < p; ++c) {
      const double g = dcos(i, c);
      if (g == 0.0 || qn[i] == 0.0 || rn[c] == 0.0) continue;
      const double* rc = r.row(c).data();
      k.axpy(g / (qn[i] * rn[c]), rc, dqi, dim);
      k.axpy(-g * cos(i, c) / (qn[i] * qn[i]), qi, dqi, dim);
      double* drc = t.dr.row(c).data();
      k.axpy(g / (qn[i] * rn[c]), qi, drc, dim);
      k.axpy(-g * cos(i, c) / (rn[c] * rn[c]), rc, drc, dim);
    }
  }
  return t;
}

void CheckBatchShapes(const Matrix& features, std::size_t labels, const Matrix& semantics) {
  if (features.rows() == 0) throw Error(ErrorCode::kEmptyBatch, "batch has no instances");
  if (labels != features.rows()) {
    throw Error(ErrorCode::kDimMismatch, "labels and feature rows differ in count");
  }
  if (semantics.rows() == 0) throw Error(ErrorCode::kEmptyBatch, "no semantic rows");
}

}  // namespace

LossAndGradient DistanceLoss(const Matrix& batch_features, const Matrix& batch_semantics,
                             const MlpWeights& w, double lambda) {
  CheckBatchShapes(batch_features, batch_semantics.rows(), batch_semantics);
  if (batch_features.cols() != w.output_dim()) {
    throw Error(ErrorCode::kDimMismatch, "feature width differs from the network output");
  }
  // Instances of one class share a semantic vector; project each distinct
  // row once.
  std::map<std::vector<double>, std::size_t> distinct;
  std::vector<std::size_t> first_row;
  std::vector<std::size_t> index(batch_semantics.rows());
  for (std::size_t i = 0; i < batch_semantics.rows(); ++i) {
    const auto row = batch_semantics.row(i);
    auto [it, inserted] =
        distinct.emplace(std::vector<double>(row.begin(), row.end()), first_row.size());
    if (inserted) first_row.push_back(i);
    index[i] = it->second;
  }
  const Matrix unique = GatherRows(batch_semantics, first_row);

  ForwardCache cache;
  const Matrix projected = Forward(w, unique, &cache);
  const AlignTerms t = Align(batch_features, projected, index, AlignOptions{});
  LossAndGradient out;
  out.gradient = Backward(w, cache, t.dr);
  w.AddWeightDecayGradient(out.gradient, 2.0 * lambda);
  out.loss = t.distance + lambda * w.WeightSqNorm();
  return out;
}

std::vector<std::size_t> PredictBatchHard(const Matrix& batch_features, const Matrix& prototypes,
                                          bool allow_zero_prototypes) {
  if (batch_features.cols() != prototypes.cols()) {
    throw Error(ErrorCode::kDimMismatch, "features and prototypes differ in width");
  }
  const auto& k = simd::Active();
  Vector rn;
  RequireRowNorms(prototypes, rn, "prototype", allow_zero_prototypes);
  std::vector<std::size_t> out(batch_features.rows());
  for (std::size_t i = 0; i < batch_features.rows(); ++i) {
    const auto x = batch_features.row(i);
    const double xn = std::sqrt(k.dot(x.data(), x.data(), x.size()));
    if (!(xn > 0.0)) throw Error(ErrorCode::kDegenerateVector, "zero-norm feature");
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t c = 0; c < prototypes.rows(); ++c) {
      const double cs =
          rn[c] > 0.0 ? k.dot(x.data(), prototypes.row(c).data(), x.size()) / (xn * rn[c]) : 0.0;
      if (cs > best_cos) {
        best_cos = cs;
        best = c;
      }
    }
    out[i] = best;
  }
  return out;
}

BatchHistogram HardHistogram(std::span<const std::size_t> predictions, std::size_t classes) {
  BatchHistogram h;
  h.counts.assign(classes, 0.0);
  for (std::size_t c : predictions) h.counts.at(c) += 1.0;
  h.total = static_cast<double>(predictions.size());
  return h;
}

BatchHistogram SoftHistogram(const Matrix& batch_features, const Matrix& prototypes, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kConfigError, "tau must be > 0");
  if (batch_features.cols() != prototypes.cols()) {
    throw Error(ErrorCode::kDimMismatch, "features and prototypes differ in width");
  }
  if (batch_features.rows() == 0) throw Error(ErrorCode::kEmptyBatch, "batch has no instances");
  AlignOptions opt;
  opt.tau = tau;
  opt.histograms = true;
  // Labels are irrelevant to the histogram; point every row at class 0.
  const std::vector<std::size_t> labels(batch_features.rows(), 0);
  return Align(batch_features, prototypes, labels, opt).soft;
}

SkewnessLoss ComputeSkewnessLoss(const BatchHistogram& hist, SkewSum mode) {
  const std::size_t p = hist.counts.size();
  SkewnessLoss out;
  out.gradient.assign(p, 0.0);
  if (p == 0) return out;
  const double pd = static_cast<double>(p);
  double mean = 0.0;
  for (double h : hist.counts) mean += h;
  mean /= pd;
  Vector dev(p);
  double var = 0.0;
  for (std::size_t c = 0; c < p; ++c) {
    dev[c] = hist.counts[c] - mean;
    var += dev[c] * dev[c];
  }
  var /= pd;
  if (var <= kVarianceEpsilon) return out;

  const double var15 = std::pow(var, 1.5);
  // d var / d h_k = (2/p) dev_k, since the deviations sum to zero.
  if (mode == SkewSum::kInstances) {
    const double n = hist.total;
    double s = 0.0;
    double weighted_sq = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      s += hist.counts[c] * dev[c] * dev[c] * dev[c];
      weighted_sq += hist.counts[c] * dev[c] * dev[c];
    }
    out.loss = s / (n * var15);
    for (std::size_t c = 0; c < p; ++c) {
      const double ds = dev[c] * dev[c] * dev[c] + 3.0 * hist.counts[c] * dev[c] * dev[c] -
                        3.0 * weighted_sq / pd;
      out.gradient[c] = ds / (n * var15) - 1.5 * out.loss / var * (2.0 / pd) * dev[c];
    }
  } else {
    double s = 0.0;
    double sq = 0.0;
    for (double d : dev) {
      s += d * d * d;
      sq += d * d;
    }
    out.loss = s / (pd * var15);
    for (std::size_t c = 0; c < p; ++c) {
      const double ds = 3.0 * dev[c] * dev[c] - 3.0 * sq / pd;
      out.gradient[c] = ds / (pd * var15) - 1.5 * out.loss / var * (2.0 / pd) * dev[c];
    }
  }
  return out;
}

TotalLoss ComputeTotalLoss(const Batch& batch, const MlpWeights& w, const TrainConfig& cfg) {
  cfg.Validate();
  CheckBatchShapes(batch.features, batch.labels.size(), batch.class_semantics);
  for (std::size_t l : batch.labels) {
    if (l >= batch.class_semantics.rows()) {
      throw Error(ErrorCode::kDimMismatch, "batch label outside the seen classes");
    }
  }
  AlignOptions opt;
  opt.alpha = cfg.alpha;
  opt.tau = cfg.tau;
  opt.skew_sum = cfg.skew_sum;
  opt.histograms = true;
  opt.allow_zero_rows = true;

  TotalLoss out;
  ForwardCache cache;
  AlignTerms t;
  if (cfg.direction == Direction::kSemanticToFeature) {
    const Matrix prototypes = Forward(w, batch.class_semantics, &cache);
    if (prototypes.cols() != batch.features.cols()) {
      throw Error(ErrorCode::kDimMismatch, "feature width differs from the network output");
    }
    t = Align(batch.features, prototypes, batch.labels, opt);
    if (cfg.alpha == 0.0) {
      LossAndGradient d =
          DistanceLoss(batch.features, GatherRows(batch.class_semantics, batch.labels), w,
                       cfg.lambda);
      out.distance = d.loss;
      out.total = d.loss;
      out.gradient = std::move(d.gradient);
    } else {
      out.gradient = Backward(w, cache, t.dr);
    }
  } else {
    const Matrix queries = Forward(w, batch.features, &cache);
    if (queries.cols() != batch.class_semantics.cols()) {
      throw Error(ErrorCode::kDimMismatch, "semantic width differs from the network output");
    }
    t = Align(queries, batch.class_semantics, batch.labels, opt);
    out.gradient = Backward(w, cache, t.dq);
  }
  if (cfg.alpha != 0.0 || cfg.direction == Direction::kFeatureToSemantic) {
    w.AddWeightDecayGradient(out.gradient, 2.0 * cfg.lambda);
    out.distance = t.distance + cfg.lambda * w.WeightSqNorm();
    out.skewness = t.skewness;
    out.total = out.distance + cfg.alpha * out.skewness;
  }
  out.soft = std::move(t.soft);
  out.hard = std::move(t.hard);
  return out;
}

}  // namespace hubless
