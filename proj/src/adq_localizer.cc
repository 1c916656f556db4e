// Copyright 2026 The dctscope Authors
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

#include "dctscope/adq_localizer.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dctscope/error.h"

namespace dctscope {
namespace {

// Histogram bound used when looking for a lattice in step-1 data.
constexpr int kLatticeBound = 255;
constexpr int kMaxLattice = 16;

int64_t FloorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// round(v / s), ties up.
int64_t Fold(int64_t v, int s) { return s == 1 ? v : FloorDiv(2 * v + s, 2 * s); }

Histogram FoldedHistogram(const CoeffGrid& grid, Frequency f, int s, int bound) {
  Histogram h;
  h.frequency = f;
  h.bound = bound;
  h.counts.assign(2 * bound + 1, 0);
  for (int by = 0; by < grid.blocks_high(); ++by) {
    for (int bx = 0; bx < grid.blocks_wide(); ++bx) {
      const int64_t v = Fold(grid.coeff(bx, by, f.row, f.col), s);
      if (v < -bound) {
        h.overflow_low++;
      } else if (v > bound) {
        h.overflow_high++;
      } else {
        h.counts[v + bound]++;
      }
    }
  }
  return h;
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void CheckConfig(const AdqConfig& c) {
  if (c.frequency_count < 1 || c.frequency_count > 63 || c.candidate_min < 1 ||
      c.candidate_max < c.candidate_min || c.top_k < 1 || c.histogram_bound < 1 ||
      c.smoothing < 0 || c.max_log_ratio <= 0 || c.prior_single <= 0 ||
      c.prior_single >= 1 || c.requant_noise <= 0 || c.min_blocks < 1) {
    throw Error(ErrorCode::kConfig, "invalid localizer configuration");
  }
}

// Whether the bins (q1, q2) predicts empty are both expected to be populated
// under the single-compression fit and observed nearly empty.
bool EmptyBinsSupported(const Histogram& h, int q1, int q2, const AdqConfig& c) {
  const double n = static_cast<double>(h.total());
  const double b = LaplaceScale(h, q2);
  double expected = 0, observed = 0;
  for (int v = -h.bound; v <= h.bound; ++v) {
    if (v == 0 || BinContribution(v, q1, q2) != 0) continue;
    expected += n * LaplaceMass(q2 * (v - 0.5), q2 * (v + 0.5), b);
    observed += static_cast<double>(h.count(v));
  }
  return expected >= c.min_empty_expected && observed <= c.max_empty_ratio * expected;
}

FrequencyEstimate EstimateFrequency(const CoeffGrid& grid, Frequency f, int q2,
                                    int lattice, const AdqConfig& config) {
  FrequencyEstimate fe;
  fe.frequency = f;
  fe.q2 = q2;
  fe.effective_q2 = q2 * lattice;
  const Histogram h = FoldedHistogram(grid, f, lattice, config.histogram_bound);
  double best = 0;
  int best_q1 = fe.effective_q2;
  for (int c = config.candidate_min; c <= config.candidate_max; ++c) {
    double s = 0;
    try {
      s = PeriodStrength(h, c, fe.effective_q2);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateHistogram) throw;
      break;
    }
    if (s > best && EmptyBinsSupported(h, c, fe.effective_q2, config)) {
      best = s;
      best_q1 = c;
    }
  }
  fe.q1 = best_q1;
  fe.score = best;
  fe.reliable = best >= config.reliability_threshold && best_q1 != fe.effective_q2;
  return fe;
}

}  // namespace

std::vector<Frequency> AnalysisFrequencies(const AdqConfig& config) {
  std::vector<Frequency> out;
  for (int z = 1; z <= config.frequency_count; ++z) {
    const int n = kZigZagToNatural[z];
    out.push_back({n / kBlockSize, n % kBlockSize});
  }
  return out;
}

int DetectLattice(const Histogram& h) {
  int64_t far = 0;
  for (int v = -h.bound; v <= h.bound; ++v) {
    if (std::abs(v) >= 2) far += h.count(v);
  }
  if (far < 50) return 1;
  for (int s = kMaxLattice; s >= 2; --s) {
    int64_t on = 0, off = 0, outer = 0;
    for (int v = -h.bound; v <= h.bound; ++v) {
      if (std::abs(v) < 2) continue;
      const int64_t n = h.count(v);
      const int64_t dist = std::abs(v - s * Fold(v, s));
      if (s >= 4) {
        (dist > 1 ? off : on) += n;
        if (std::abs(v) >= s - 1) outer += n;
      } else {
        (dist == 0 ? on : off) += n;
        outer += n;
      }
    }
    if (outer < 20 || on == 0) continue;
    const bool pass = s >= 4 ? off <= 0.01 * static_cast<double>(far)
                             : off <= 0.2 * static_cast<double>(on);
    if (pass) return s;
  }
  return 1;
}

Q1Estimate EstimateQ1(const JpegModel& model, const AdqConfig& config) {
  CheckConfig(config);
  Q1Estimate est;
  est.blocks = model.luma.block_count();
  if (est.blocks < config.min_blocks) {
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(est.blocks) + " blocks, need " +
                    std::to_string(config.min_blocks));
  }
  std::vector<double> scores;
  for (const Frequency f : AnalysisFrequencies(config)) {
    const int q2 = model.luma_qtable.step(f.row, f.col);
    FrequencyEstimate fe = EstimateFrequency(model.luma, f, q2, 1, config);
    if (config.fold_lattice && q2 == 1) {
      const int s = DetectLattice(BuildHistogram(model.luma, f, kLatticeBound));
      if (s > 1) {
        const FrequencyEstimate folded = EstimateFrequency(model.luma, f, q2, s, config);
        if (folded.reliable || !fe.reliable) fe = folded;
      }
    }
    scores.push_back(fe.score);
    est.frequencies.push_back(fe);
  }
  std::sort(scores.begin(), scores.end(), std::greater<>());
  const size_t k = std::min<size_t>(config.top_k, scores.size());
  double sum = 0;
  for (size_t i = 0; i < k; ++i) sum += scores[i];
  est.confidence = k ? sum / k : 0;
  est.reliable = est.confidence >= config.reliability_threshold &&
                 std::any_of(est.frequencies.begin(), est.frequencies.end(),
                             [](const FrequencyEstimate& f) { return f.reliable; });
  return est;
}

BinLikelihood ComputeBinLikelihood(double b, int q1, int q2, int64_t n,
                                   const AdqConfig& config) {
  BinLikelihood out;
  const int bound = config.histogram_bound;
  out.bound = bound;
  out.single.assign(2 * bound + 1, 0.0);
  out.dbl.assign(2 * bound + 1, 0.0);
  const double sigma = config.requant_noise;
  const int64_t v1_lo = FloorDiv(static_cast<int64_t>(q2) * (-bound - 1), q1) - 2;
  const int64_t v1_hi = -v1_lo;
  for (int v = -bound; v <= bound; ++v) {
    const double lo = q2 * (v - 0.5), hi = q2 * (v + 0.5);
    out.single[v + bound] = LaplaceMass(lo, hi, b);
    double d = 0;
    for (int64_t v1 = v1_lo; v1 <= v1_hi; ++v1) {
      const double c = static_cast<double>(q1 * v1);
      if (c < lo - 8 * sigma || c > hi + 8 * sigma) continue;
      const double w = LaplaceMass(q1 * (v1 - 0.5), q1 * (v1 + 0.5), b);
      d += w * (NormalCdf((hi - c) / sigma) - NormalCdf((lo - c) / sigma));
    }
    out.dbl[v + bound] = d;
  }
  const double nn = static_cast<double>(n);
  const double denom = nn + config.smoothing * (2 * bound + 1);
  for (int i = 0; i <= 2 * bound; ++i) {
    out.single[i] = (nn * out.single[i] + config.smoothing) / denom;
    out.dbl[i] = (nn * out.dbl[i] + config.smoothing) / denom;
  }
  return out;
}

PosteriorMap BlockPosteriorMap(const JpegModel& model, const Q1Estimate& est,
                               const AdqConfig& config) {
  CheckConfig(config);
  const CoeffGrid& grid = model.luma;
  const int bw = grid.blocks_wide(), bh = grid.blocks_high();
  PosteriorMap out;
  out.blocks = ProbabilityMap(bw, bh, 0.5);
  std::vector<const FrequencyEstimate*> used;
  for (const FrequencyEstimate& f : est.frequencies) {
    if (f.reliable) used.push_back(&f);
  }
  if (!est.reliable || used.empty()) {
    out.unreliable = true;
    out.warning = "primary quantization estimate unreliable (confidence " +
                  std::to_string(est.confidence) + "); map set to 0.5";
  } else {
    const double prior = std::log(config.prior_single / (1 - config.prior_single));
    std::vector<double> log_ratio(static_cast<size_t>(bw) * bh, prior);
    for (const FrequencyEstimate* f : used) {
      const int s = f->effective_q2 / f->q2;
      const Frequency fr = f->frequency;
      const Histogram h = FoldedHistogram(grid, fr, s, config.histogram_bound);
      const double b = LaplaceScale(h, f->effective_q2);
      const BinLikelihood lk =
          ComputeBinLikelihood(b, f->q1, f->effective_q2, h.total(), config);
      for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
          const int64_t v = Fold(grid.coeff(bx, by, fr.row, fr.col), s);
          if (v < -lk.bound || v > lk.bound) continue;
          const double r = std::log(lk.single[v + lk.bound] / lk.dbl[v + lk.bound]);
          log_ratio[static_cast<size_t>(by) * bw + bx] +=
              std::clamp(r, -config.max_log_ratio, config.max_log_ratio);
        }
      }
    }
    if (config.saturation_margin >= 0) {
      const GrayImage px = DecodePixels(model);
      const int lo = config.saturation_margin, hi = 255 - config.saturation_margin;
      for (int y = 0; y < px.height; ++y) {
        for (int x = 0; x < px.width; ++x) {
          const int v = px.at(x, y);
          if (v <= lo || v >= hi) {
            log_ratio[static_cast<size_t>(y / kBlockSize) * bw + x / kBlockSize] = prior;
          }
        }
      }
    }
    for (size_t i = 0; i < log_ratio.size(); ++i) {
      out.blocks.values[i] = 1.0 / (1.0 + std::exp(-log_ratio[i]));
    }
    if (config.neighbour_weight > 0) {
      const ProbabilityMap raw = out.blocks;
      for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
          double sum = 0;
          int n = 0;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int x = bx + dx, y = by + dy;
              if (x < 0 || y < 0 || x >= bw || y >= bh) continue;
              sum += raw.at(x, y);
              ++n;
            }
          }
          out.blocks.at(bx, by) = (1 - config.neighbour_weight) * raw.at(bx, by) +
                                  config.neighbour_weight * sum / n;
        }
      }
    }
  }
  out.pixels = ProbabilityMap(model.pixel_width, model.pixel_height);
  for (int y = 0; y < model.pixel_height; ++y) {
    for (int x = 0; x < model.pixel_width; ++x) {
      out.pixels.at(x, y) = out.blocks.at(x / kBlockSize, y / kBlockSize);
    }
  }
  return out;
}

}  // namespace dctscope
