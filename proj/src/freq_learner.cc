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

#include "dctscope/freq_learner.h"

#include <Eigen/Core>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "dctscope/dct_features.h"
#include "dctscope/error.h"
#include "dctscope/png_io.h"
#include "dctscope/rng.h"

namespace dctscope {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

constexpr int kTaps = 64;       // 8 x 8 dilated kernel
constexpr int kPadBefore = 32;  // 4 taps * dilation 8

double Relu(double x) { return x > 0 ? x : 0; }

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -log p(label | logit), stable for large |logit|.
double Bce(double logit, int label) {
  const double z = label ? -logit : logit;
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// 3x3, padding 1. Row index c * 9 + ky * 3 + kx, column i * w + j.
void Im2Col(const double* x, int channels, int h, int w, double* col) {
  const int m = h * w;
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1, dx = k % 3 - 1;
      double* row = col + (static_cast<size_t>(c) * 9 + k) * m;
      for (int i = 0; i < h; ++i) {
        const int si = i + dy;
        for (int j = 0; j < w; ++j) {
          const int sj = j + dx;
          row[i * w + j] = (si < 0 || si >= h || sj < 0 || sj >= w)
                               ? 0.0
                               : x[(static_cast<size_t>(c) * h + si) * w + sj];
        }
      }
    }
  }
}

void Col2Im(const double* col, int channels, int h, int w, double* x) {
  const int m = h * w;
  std::fill(x, x + static_cast<size_t>(channels) * m, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1, dx = k % 3 - 1;
      const double* row = col + (static_cast<size_t>(c) * 9 + k) * m;
      for (int i = 0; i < h; ++i) {
        const int si = i + dy;
        if (si < 0 || si >= h) continue;
        for (int j = 0; j < w; ++j) {
          const int sj = j + dx;
          if (sj < 0 || sj >= w) continue;
          x[(static_cast<size_t>(c) * h + si) * w + sj] += row[i * w + j];
        }
      }
    }
  }
}

// Everything the backward pass needs from one forward evaluation.
struct Activations {
  int h = 0, w = 0, hs = 0, ws = 0;
  std::vector<double> za;   // [N][Wd]
  std::vector<double> za1;  // [N][Wb]
  std::vector<double> zb;   // [N][Wb]
  std::vector<double> sep;  // [64 S][M]
  std::vector<double> col1, z1, h1, col2, z2;
  std::vector<double> pooled;
  double logit = 0;
};

struct Indices {
  int a_w, a_b, a1_w, a1_b, b_w = -1, b_b = -1, c1_w, c1_b, c2_w, c2_b, head_w, head_b;
};

Indices IndexOf(const LearnerParams& p) {
  Indices ix{};
  auto find = [&](const char* n) {
    for (size_t i = 0; i < p.tensors.size(); ++i) {
      if (p.tensors[i].name == n) return static_cast<int>(i);
    }
    return -1;
  };
  ix.a_w = find("a_w");
  ix.a_b = find("a_b");
  ix.a1_w = find("a1_w");
  ix.a1_b = find("a1_b");
  ix.b_w = find("b_w");
  ix.b_b = find("b_b");
  ix.c1_w = find("c1_w");
  ix.c1_b = find("c1_b");
  ix.c2_w = find("c2_w");
  ix.c2_b = find("c2_b");
  ix.head_w = find("head_w");
  ix.head_b = find("head_b");
  return ix;
}

void CheckInput(const LearnerParams& params, const LearnerInput& in) {
  const size_t n = static_cast<size_t>(in.height) * in.width;
  const bool volume = params.arch.input == InputKind::kVolume;
  if (in.height < 8 || in.width < 8 || in.height % 8 || in.width % 8 ||
      (volume ? in.level.size() : in.plane.size()) != n) {
    throw Error(ErrorCode::kShapeMismatch, "input does not match the network");
  }
  if (volume) {
    for (uint8_t l : in.level) {
      if (l > params.arch.threshold) {
        throw Error(ErrorCode::kShapeMismatch, "volume level above threshold");
      }
    }
  }
}

void RunForward(const LearnerParams& params, const LearnerInput& in, Activations& act) {
  CheckInput(params, in);
  const LearnerArch& arch = params.arch;
  const Indices ix = IndexOf(params);
  const int h = in.height, w = in.width, n = h * w;
  const int cin = InputChannels(arch);
  const int wd = arch.dilated_width, wb = arch.branch_width, pw = arch.post_width;
  const int s = SeparatedBranchChannels(arch);
  const bool volume = arch.input == InputKind::kVolume;
  act.h = h;
  act.w = w;
  act.hs = h / 8;
  act.ws = w / 8;
  const int m = act.hs * act.ws;

  // Branch A: dilated conv.
  const double* aw = params.tensors[ix.a_w].values.data();
  const double* ab = params.tensors[ix.a_b].values.data();
  act.za.assign(static_cast<size_t>(n) * wd, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double* z = &act.za[(static_cast<size_t>(y) * w + x) * wd];
      for (int a = 0; a < wd; ++a) z[a] = ab[a];
      for (int ky = 0; ky < 8; ++ky) {
        const int sy = y + 8 * ky - kPadBefore;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 8; ++kx) {
          const int sx = x + 8 * kx - kPadBefore;
          if (sx < 0 || sx >= w) continue;
          const size_t src = static_cast<size_t>(sy) * w + sx;
          const int tap = ky * 8 + kx;
          if (volume) {
            const double* k = aw + (static_cast<size_t>(tap) * cin + in.level[src]) * wd;
            for (int a = 0; a < wd; ++a) z[a] += k[a];
          } else {
            const double v = in.plane[src];
            const double* k = aw + static_cast<size_t>(tap) * wd;
            for (int a = 0; a < wd; ++a) z[a] += v * k[a];
          }
        }
      }
    }
  }
  // Branch A: 1x1.
  const double* a1w = params.tensors[ix.a1_w].values.data();
  const double* a1b = params.tensors[ix.a1_b].values.data();
  act.za1.assign(static_cast<size_t>(n) * wb, 0.0);
  for (int p = 0; p < n; ++p) {
    const double* za = &act.za[static_cast<size_t>(p) * wd];
    for (int o = 0; o < wb; ++o) {
      double acc = a1b[o];
      for (int a = 0; a < wd; ++a) acc += a1w[o * wd + a] * Relu(za[a]);
      act.za1[static_cast<size_t>(p) * wb + o] = acc;
    }
  }
  // Branch B.
  if (arch.use_qtable) {
    const double* bw = params.tensors[ix.b_w].values.data();
    const double* bb = params.tensors[ix.b_b].values.data();
    act.zb.assign(static_cast<size_t>(n) * wb, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const size_t p = static_cast<size_t>(y) * w + x;
        const double q = in.qtable.step(y % 8, x % 8);
        for (int o = 0; o < wb; ++o) {
          const double k = volume ? bw[o * cin + in.level[p]] : bw[o] * in.plane[p];
          act.zb[p * wb + o] = bb[o] + q * k;
        }
      }
    }
  } else {
    act.zb.clear();
  }
  // Frequency separation: channel c * 64 + f at (i, j).
  act.sep.assign(static_cast<size_t>(64) * s * m, 0.0);
  for (int c = 0; c < s; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const size_t p = static_cast<size_t>(y) * w + x;
        const double v = c < wb ? Relu(act.za1[p * wb + c]) : Relu(act.zb[p * wb + c - wb]);
        const int f = (y % 8) * 8 + x % 8;
        act.sep[(static_cast<size_t>(c) * 64 + f) * m + (y / 8) * act.ws + x / 8] = v;
      }
    }
  }
  // 3x3 convolutions.
  const int k1 = 64 * s * 9, k2 = pw * 9;
  act.col1.resize(static_cast<size_t>(k1) * m);
  Im2Col(act.sep.data(), 64 * s, act.hs, act.ws, act.col1.data());
  act.z1.resize(static_cast<size_t>(pw) * m);
  MutMap z1(act.z1.data(), pw, m);
  z1.noalias() = ConstMap(params.tensors[ix.c1_w].values.data(), pw, k1) *
                 ConstMap(act.col1.data(), k1, m);
  const double* c1b = params.tensors[ix.c1_b].values.data();
  act.h1.resize(act.z1.size());
  for (int o = 0; o < pw; ++o) {
    for (int j = 0; j < m; ++j) {
      act.z1[o * m + j] += c1b[o];
      act.h1[o * m + j] = Relu(act.z1[o * m + j]);
    }
  }
  act.col2.resize(static_cast<size_t>(k2) * m);
  Im2Col(act.h1.data(), pw, act.hs, act.ws, act.col2.data());
  act.z2.resize(static_cast<size_t>(pw) * m);
  MutMap z2(act.z2.data(), pw, m);
  z2.noalias() = ConstMap(params.tensors[ix.c2_w].values.data(), pw, k2) *
                 ConstMap(act.col2.data(), k2, m);
  const double* c2b = params.tensors[ix.c2_b].values.data();
  act.pooled.assign(pw, 0.0);
  for (int o = 0; o < pw; ++o) {
    double sum = 0;
    for (int j = 0; j < m; ++j) {
      act.z2[o * m + j] += c2b[o];
      sum += Relu(act.z2[o * m + j]);
    }
    act.pooled[o] = sum / m;
  }
  const double* hw = params.tensors[ix.head_w].values.data();
  double logit = params.tensors[ix.head_b].values[0];
  for (int o = 0; o < pw; ++o) logit += hw[o] * act.pooled[o];
  act.logit = logit;
}

// Adds scale * d(logit)/d(params) to grad.
void RunBackward(const LearnerParams& params, const LearnerInput& in,
                 const Activations& act, double dlogit, LearnerParams& grad) {
  const LearnerArch& arch = params.arch;
  const Indices ix = IndexOf(params);
  const int h = act.h, w = act.w, n = h * w, m = act.hs * act.ws;
  const int cin = InputChannels(arch);
  const int wd = arch.dilated_width, wb = arch.branch_width, pw = arch.post_width;
  const int s = SeparatedBranchChannels(arch);
  const int k1 = 64 * s * 9, k2 = pw * 9;
  const bool volume = arch.input == InputKind::kVolume;
  auto g = [&](int i) { return grad.tensors[i].values.data(); };

  // Head.
  const double* hw = params.tensors[ix.head_w].values.data();
  for (int o = 0; o < pw; ++o) g(ix.head_w)[o] += dlogit * act.pooled[o];
  g(ix.head_b)[0] += dlogit;
  // Pool + second conv.
  std::vector<double> dz2(static_cast<size_t>(pw) * m);
  for (int o = 0; o < pw; ++o) {
    const double d = dlogit * hw[o] / m;
    for (int j = 0; j < m; ++j) dz2[o * m + j] = act.z2[o * m + j] > 0 ? d : 0.0;
  }
  ConstMap dz2m(dz2.data(), pw, m);
  MutMap(g(ix.c2_w), pw, k2).noalias() += dz2m * ConstMap(act.col2.data(), k2, m).transpose();
  for (int o = 0; o < pw; ++o) g(ix.c2_b)[o] += dz2m.row(o).sum();
  std::vector<double> dcol2(static_cast<size_t>(k2) * m);
  MutMap(dcol2.data(), k2, m).noalias() =
      ConstMap(params.tensors[ix.c2_w].values.data(), pw, k2).transpose() * dz2m;
  std::vector<double> dz1(static_cast<size_t>(pw) * m);
  Col2Im(dcol2.data(), pw, act.hs, act.ws, dz1.data());
  for (size_t i = 0; i < dz1.size(); ++i) {
    if (act.z1[i] <= 0) dz1[i] = 0;
  }
  // First conv.
  ConstMap dz1m(dz1.data(), pw, m);
  MutMap(g(ix.c1_w), pw, k1).noalias() += dz1m * ConstMap(act.col1.data(), k1, m).transpose();
  for (int o = 0; o < pw; ++o) g(ix.c1_b)[o] += dz1m.row(o).sum();
  std::vector<double> dcol1(static_cast<size_t>(k1) * m);
  MutMap(dcol1.data(), k1, m).noalias() =
      ConstMap(params.tensors[ix.c1_w].values.data(), pw, k1).transpose() * dz1m;
  std::vector<double> dsep(static_cast<size_t>(64) * s * m);
  Col2Im(dcol1.data(), 64 * s, act.hs, act.ws, dsep.data());

  // Undo separation and the branch ReLUs.
  std::vector<double> dza1(static_cast<size_t>(n) * wb, 0.0);
  std::vector<double> dzb(arch.use_qtable ? static_cast<size_t>(n) * wb : 0, 0.0);
  for (int c = 0; c < s; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const size_t p = static_cast<size_t>(y) * w + x;
        const int f = (y % 8) * 8 + x % 8;
        const double d = dsep[(static_cast<size_t>(c) * 64 + f) * m + (y / 8) * act.ws + x / 8];
        if (c < wb) {
          if (act.za1[p * wb + c] > 0) dza1[p * wb + c] = d;
        } else if (act.zb[p * wb + c - wb] > 0) {
          dzb[p * wb + c - wb] = d;
        }
      }
    }
  }
  // Branch B.
  if (arch.use_qtable) {
    double* gbw = g(ix.b_w);
    double* gbb = g(ix.b_b);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const size_t p = static_cast<size_t>(y) * w + x;
        const double q = in.qtable.step(y % 8, x % 8);
        for (int o = 0; o < wb; ++o) {
          const double d = dzb[p * wb + o];
          if (d == 0) continue;
          gbb[o] += d;
          if (volume) {
            gbw[o * cin + in.level[p]] += d * q;
          } else {
            gbw[o] += d * q * in.plane[p];
          }
        }
      }
    }
  }
  // Branch A 1x1.
  const double* a1w = params.tensors[ix.a1_w].values.data();
  double* ga1w = g(ix.a1_w);
  double* ga1b = g(ix.a1_b);
  std::vector<double> dza(static_cast<size_t>(n) * wd, 0.0);
  for (int p = 0; p < n; ++p) {
    const double* za = &act.za[static_cast<size_t>(p) * wd];
    double* dz = &dza[static_cast<size_t>(p) * wd];
    for (int o = 0; o < wb; ++o) {
      const double d = dza1[static_cast<size_t>(p) * wb + o];
      if (d == 0) continue;
      ga1b[o] += d;
      for (int a = 0; a < wd; ++a) {
        ga1w[o * wd + a] += d * Relu(za[a]);
        dz[a] += d * a1w[o * wd + a];
      }
    }
    for (int a = 0; a < wd; ++a) {
      if (za[a] <= 0) dz[a] = 0;
    }
  }
  // Dilated conv.
  double* gaw = g(ix.a_w);
  double* gab = g(ix.a_b);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double* dz = &dza[(static_cast<size_t>(y) * w + x) * wd];
      bool any = false;
      for (int a = 0; a < wd; ++a) {
        gab[a] += dz[a];
        any |= dz[a] != 0;
      }
      if (!any) continue;
      for (int ky = 0; ky < 8; ++ky) {
        const int sy = y + 8 * ky - kPadBefore;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 8; ++kx) {
          const int sx = x + 8 * kx - kPadBefore;
          if (sx < 0 || sx >= w) continue;
          const size_t src = static_cast<size_t>(sy) * w + sx;
          const int tap = ky * 8 + kx;
          if (volume) {
            double* k = gaw + (static_cast<size_t>(tap) * cin + in.level[src]) * wd;
            for (int a = 0; a < wd; ++a) k[a] += dz[a];
          } else {
            const double v = in.plane[src];
            double* k = gaw + static_cast<size_t>(tap) * wd;
            for (int a = 0; a < wd; ++a) k[a] += v * dz[a];
          }
        }
      }
    }
  }
}

bool AllFinite(const LearnerParams& p) {
  for (const ParamTensor& t : p.tensors) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> b, size_t& pos) {
  if (pos + 4 > b.size()) throw Error(ErrorCode::kCorruptStream, "checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

constexpr char kMagic[8] = {'D', 'C', 'T', 'S', 'C', 'O', 'P', 'E'};
constexpr uint32_t kCheckpointVersion = 1;

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string InputKindName(InputKind k) {
  switch (k) {
    case InputKind::kVolume: return "volume";
    case InputKind::kRawDct: return "raw_dct";
    case InputKind::kPixels: return "pixels";
  }
  return "volume";
}

std::optional<InputKind> ParseInputKind(const std::string& s) {
  for (InputKind k : {InputKind::kVolume, InputKind::kRawDct, InputKind::kPixels}) {
    if (InputKindName(k) == s) return k;
  }
  return std::nullopt;
}

int InputChannels(const LearnerArch& arch) {
  return arch.input == InputKind::kVolume ? arch.threshold + 1 : 1;
}

int SeparatedBranchChannels(const LearnerArch& arch) {
  return arch.branch_width * (arch.use_qtable ? 2 : 1);
}

ParamTensor& LearnerParams::get(const std::string& name) {
  for (ParamTensor& t : tensors) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kShapeMismatch, "no parameter tensor " + name);
}

const ParamTensor& LearnerParams::get(const std::string& name) const {
  return const_cast<LearnerParams*>(this)->get(name);
}

size_t LearnerParams::size() const {
  size_t n = 0;
  for (const ParamTensor& t : tensors) n += t.values.size();
  return n;
}

LearnerParams ZeroParams(const LearnerArch& arch) {
  if (arch.threshold < 1 || arch.threshold > 255 || arch.dilated_width < 1 ||
      arch.branch_width < 1 || arch.post_width < 1) {
    throw Error(ErrorCode::kConfig, "invalid learner architecture");
  }
  const int cin = InputChannels(arch);
  const int wd = arch.dilated_width, wb = arch.branch_width, pw = arch.post_width;
  const int s = SeparatedBranchChannels(arch);
  LearnerParams p;
  p.arch = arch;
  auto add = [&](const char* name, std::vector<int> shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    p.tensors.push_back({name, std::move(shape), std::vector<double>(n, 0.0)});
  };
  add("a_w", {8, 8, cin, wd});
  add("a_b", {wd});
  add("a1_w", {wb, wd});
  add("a1_b", {wb});
  if (arch.use_qtable) {
    add("b_w", {wb, cin});
    add("b_b", {wb});
  }
  add("c1_w", {pw, 64 * s, 3, 3});
  add("c1_b", {pw});
  add("c2_w", {pw, pw, 3, 3});
  add("c2_b", {pw});
  add("head_w", {pw});
  add("head_b", {1});
  return p;
}

LearnerParams InitParams(const LearnerArch& arch, uint64_t seed) {
  LearnerParams p = ZeroParams(arch);
  Rng rng(seed);
  // Effective fan-in: one-hot inputs have a single active channel.
  const int cin_active = 1;
  for (ParamTensor& t : p.tensors) {
    if (t.shape.size() < 2 && t.name != "head_w") continue;
    double fan_in = 1;
    if (t.name == "a_w") {
      fan_in = 64.0 * cin_active;
    } else if (t.name == "b_w") {
      fan_in = 1;
    } else if (t.name == "head_w") {
      fan_in = static_cast<double>(t.shape[0]);
    } else {
      for (size_t i = 1; i < t.shape.size(); ++i) fan_in *= t.shape[i];
    }
    const double sd = std::sqrt(2.0 / fan_in);
    for (double& v : t.values) v = rng.Normal(0.0, sd);
  }
  if (arch.use_qtable) {
    // The multiplied branch sees values up to the largest step.
    for (double& v : p.get("b_w").values) v /= 16.0;
  }
  return p;
}

TrainExample ExampleFromJpeg(std::span<const uint8_t> jpeg, int label) {
  JpegModel m = DecodeJpeg(jpeg);
  TrainExample ex;
  ex.pixels = DecodePixels(m);
  ex.grid = std::move(m.luma);
  ex.qtable = m.luma_qtable;
  ex.label = label;
  return ex;
}

LearnerInput MakeInput(const LearnerArch& arch, const CoeffGrid& grid,
                       const QuantTable& qtable, const GrayImage* pixels) {
  if (grid.width % 8 || grid.height % 8 || grid.width == 0 || grid.height == 0) {
    throw Error(ErrorCode::kMisalignedInput, "grid must be a multiple of 8");
  }
  LearnerInput in;
  in.height = grid.height;
  in.width = grid.width;
  in.qtable = qtable;
  const size_t n = grid.size();
  switch (arch.input) {
    case InputKind::kVolume:
      in.level.resize(n);
      for (size_t i = 0; i < n; ++i) {
        in.level[i] = static_cast<uint8_t>(
            std::min<int64_t>(std::abs(static_cast<int64_t>(grid.values[i])), arch.threshold));
      }
      break;
    case InputKind::kRawDct:
      in.plane.resize(n);
      for (size_t i = 0; i < n; ++i) in.plane[i] = grid.values[i] / 32.0;
      break;
    case InputKind::kPixels: {
      if (!pixels || pixels->empty()) {
        throw Error(ErrorCode::kShapeMismatch, "pixel input needs decoded pixels");
      }
      in.plane.resize(n);
      for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
          // Edge replication over the block padding.
          const int px = std::min(x, pixels->width - 1);
          const int py = std::min(y, pixels->height - 1);
          in.plane[static_cast<size_t>(y) * grid.width + x] =
              (pixels->at(px, py) - 128.0) / 64.0;
        }
      }
      break;
    }
  }
  return in;
}

LearnerInput MakeInput(const LearnerArch& arch, const TrainExample& ex) {
  return MakeInput(arch, ex.grid, ex.qtable, &ex.pixels);
}

double Forward(const LearnerParams& params, const LearnerInput& input,
               ForwardTrace* trace) {
  Activations act;
  RunForward(params, input, act);
  if (trace) {
    const LearnerArch& arch = params.arch;
    const int n = act.h * act.w, wb = arch.branch_width;
    const int s = SeparatedBranchChannels(arch);
    trace->pre_separation.assign(static_cast<size_t>(s) * n, 0.0);
    for (int c = 0; c < s; ++c) {
      for (int p = 0; p < n; ++p) {
        trace->pre_separation[static_cast<size_t>(c) * n + p] =
            c < wb ? Relu(act.za1[static_cast<size_t>(p) * wb + c])
                   : Relu(act.zb[static_cast<size_t>(p) * wb + c - wb]);
      }
    }
    trace->pooled = act.pooled;
    uint64_t hash = 0xCBF29CE484222325ull;  // FNV-1a over sign bits
    for (const std::vector<double>* z : {&act.za, &act.za1, &act.zb, &act.z1, &act.z2}) {
      for (double v : *z) {
        hash ^= v > 0 ? 1u : 0u;
        hash *= 0x100000001B3ull;
      }
    }
    trace->activation_pattern = hash;
  }
  return act.logit;
}

LossAndGradient Backward(const LearnerParams& params,
                         std::span<const LearnerInput> batch,
                         std::span<const int> labels) {
  if (batch.empty() || batch.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "empty or mismatched batch");
  }
  LossAndGradient out;
  out.gradient = ZeroParams(params.arch);
  const double scale = 1.0 / static_cast<double>(batch.size());
  Activations act;
  for (size_t i = 0; i < batch.size(); ++i) {
    RunForward(params, batch[i], act);
    out.loss += Bce(act.logit, labels[i]) * scale;
    out.logits.push_back(act.logit);
    const double dlogit = (Sigmoid(act.logit) - labels[i]) * scale;
    RunBackward(params, batch[i], act, dlogit, out.gradient);
  }
  if (!std::isfinite(out.loss) || !AllFinite(out.gradient)) {
    throw Error(ErrorCode::kNonFinite, "non-finite loss or gradient");
  }
  return out;
}

ClassMetrics MetricsFromPredictions(std::span<const int> predicted,
                                    std::span<const int> labels) {
  int64_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      ++pos;
      tp += predicted[i] == 1;
    } else {
      ++neg;
      tn += predicted[i] == 0;
    }
  }
  ClassMetrics m;
  m.count = pos + neg;
  m.acc = m.count ? static_cast<double>(tp + tn) / m.count : 0;
  m.tpr = pos ? static_cast<double>(tp) / pos : 0;
  m.tnr = neg ? static_cast<double>(tn) / neg : 0;
  return m;
}

ClassMetrics Evaluate(const LearnerParams& params,
                      std::span<const TrainExample> data) {
  std::vector<int> predicted, labels;
  for (const TrainExample& ex : data) {
    predicted.push_back(Forward(params, MakeInput(params.arch, ex)) >= 0 ? 1 : 0);
    labels.push_back(ex.label);
  }
  return MetricsFromPredictions(predicted, labels);
}

TrainResult Train(const LearnerArch& arch, const TrainConfig& config,
                  std::span<const TrainExample> train,
                  std::span<const TrainExample> val,
                  const EpochCallback& on_epoch) {
  if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate <= 0 ||
      config.lr_step_epochs < 1 || config.momentum < 0 || config.weight_decay < 0) {
    throw Error(ErrorCode::kConfig, "invalid training configuration");
  }
  const auto positives = std::count_if(train.begin(), train.end(),
                                       [](const TrainExample& e) { return e.label == 1; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(train.size())) {
    throw Error(ErrorCode::kEmptyClass, "training set needs both classes");
  }
  TrainResult result;
  LearnerParams params = InitParams(arch, Rng::Mix(config.seed, 0));
  LearnerParams velocity = ZeroParams(arch);
  std::vector<size_t> order(train.size());
  double best_acc = -1;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.learning_rate *
                      std::pow(config.lr_decay, (epoch - 1) / config.lr_step_epochs);
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle(Rng::Mix(config.seed, static_cast<uint64_t>(epoch)));
    shuffle.Shuffle(order.begin(), order.end());
    double loss_sum = 0;
    std::vector<int> predicted, labels;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<LearnerInput> batch;
      std::vector<int> batch_labels;
      for (size_t k = start; k < end; ++k) {
        batch.push_back(MakeInput(arch, train[order[k]]));
        batch_labels.push_back(train[order[k]].label);
      }
      LossAndGradient lg = Backward(params, batch, batch_labels);
      loss_sum += lg.loss * static_cast<double>(end - start);
      for (size_t k = 0; k < batch.size(); ++k) {
        predicted.push_back(lg.logits[k] >= 0 ? 1 : 0);
        labels.push_back(batch_labels[k]);
      }
      for (size_t t = 0; t < params.tensors.size(); ++t) {
        std::vector<double>& p = params.tensors[t].values;
        std::vector<double>& v = velocity.tensors[t].values;
        const std::vector<double>& g = lg.gradient.tensors[t].values;
        for (size_t i = 0; i < p.size(); ++i) {
          const double gi = g[i] + config.weight_decay * p[i];
          v[i] = config.momentum * v[i] + gi;
          p[i] -= lr * (gi + config.momentum * v[i]);
        }
      }
      if (!AllFinite(params)) throw Error(ErrorCode::kNonFinite, "parameters diverged");
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train = MetricsFromPredictions(predicted, labels);
    rec.val = val.empty() ? Evaluate(params, train) : Evaluate(params, val);
    result.history.push_back(rec);
    if (rec.val.acc > best_acc) {
      best_acc = rec.val.acc;
      result.params = params;
      result.best_epoch = epoch;
      result.best_val = rec.val;
    }
    if (on_epoch) on_epoch(rec);
  }
  result.final_params = params;
  return result;
}

AblationReport AblateQtable(const LearnerArch& arch, const TrainConfig& config,
                            std::span<const TrainExample> train,
                            std::span<const TrainExample> val) {
  AblationReport r;
  r.seed = config.seed;
  LearnerArch with = arch, without = arch;
  with.use_qtable = true;
  without.use_qtable = false;
  r.with_qtable = Train(with, config, train, val);
  r.without_qtable = Train(without, config, train, val);
  return r;
}

ProbabilityMap SlidingWindowMap(const LearnerParams& params, const JpegModel& model,
                                int window, int stride) {
  if (window < 8 || window % 8 || stride < 8 || stride % 8) {
    throw Error(ErrorCode::kConfig, "window and stride must be multiples of 8");
  }
  const CoeffGrid& grid = model.luma;
  GrayImage pixels;
  if (params.arch.input == InputKind::kPixels) pixels = DecodePixels(model);
  const int wh = std::min(window, grid.height), ww = std::min(window, grid.width);
  std::vector<double> sum(grid.size(), 0.0);
  std::vector<int> count(grid.size(), 0);
  auto starts = [&](int extent, int win) {
    std::vector<int> s;
    for (int v = 0; v + win <= extent; v += stride) s.push_back(v);
    if (s.back() + win < extent) s.push_back(extent - win);
    return s;
  };
  for (int y0 : starts(grid.height, wh)) {
    for (int x0 : starts(grid.width, ww)) {
      const CoeffGrid crop = GridAlignedCrop(grid, y0, x0, wh, ww);
      GrayImage crop_px;
      if (!pixels.empty()) {
        crop_px = GrayImage(ww, wh);
        for (int y = 0; y < wh; ++y) {
          for (int x = 0; x < ww; ++x) {
            crop_px.at(x, y) = pixels.at(std::min(x0 + x, pixels.width - 1),
                                         std::min(y0 + y, pixels.height - 1));
          }
        }
      }
      const double p_single = 1.0 - Sigmoid(Forward(
          params, MakeInput(params.arch, crop, model.luma_qtable, &crop_px)));
      for (int y = y0; y < y0 + wh; ++y) {
        for (int x = x0; x < x0 + ww; ++x) {
          sum[static_cast<size_t>(y) * grid.width + x] += p_single;
          count[static_cast<size_t>(y) * grid.width + x]++;
        }
      }
    }
  }
  ProbabilityMap out(model.pixel_width, model.pixel_height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const size_t i = static_cast<size_t>(y) * grid.width + x;
      out.at(x, y) = sum[i] / count[i];
    }
  }
  return out;
}

std::vector<uint8_t> SerializeParams(const LearnerParams& params) {
  std::vector<uint8_t> out(kMagic, kMagic + 8);
  PutU32(out, kCheckpointVersion);
  const LearnerArch& a = params.arch;
  PutU32(out, static_cast<uint32_t>(a.input));
  PutU32(out, a.use_qtable ? 1 : 0);
  PutU32(out, static_cast<uint32_t>(a.threshold));
  PutU32(out, static_cast<uint32_t>(a.dilated_width));
  PutU32(out, static_cast<uint32_t>(a.branch_width));
  PutU32(out, static_cast<uint32_t>(a.post_width));
  PutU32(out, static_cast<uint32_t>(params.tensors.size()));
  for (const ParamTensor& t : params.tensors) {
    PutU32(out, static_cast<uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    PutU32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) PutU32(out, static_cast<uint32_t>(d));
  }
  for (const ParamTensor& t : params.tensors) {
    for (double v : t.values) {
      const uint64_t bits = std::bit_cast<uint64_t>(v);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
    }
  }
  PutU32(out, static_cast<uint32_t>(crc32(0L, out.data(), static_cast<uInt>(out.size()))));
  return out;
}

LearnerParams DeserializeParams(std::span<const uint8_t> b) {
  if (b.size() < 12 || std::memcmp(b.data(), kMagic, 8) != 0) {
    throw Error(ErrorCode::kCorruptStream, "not a dctscope checkpoint");
  }
  size_t crc_pos = b.size() - 4;
  const uint32_t stored = GetU32(b, crc_pos);
  const uint32_t actual =
      static_cast<uint32_t>(crc32(0L, b.data(), static_cast<uInt>(b.size() - 4)));
  if (stored != actual) throw Error(ErrorCode::kCorruptStream, "checkpoint checksum mismatch");
  const std::span<const uint8_t> body = b.first(b.size() - 4);
  size_t pos = 8;
  if (GetU32(body, pos) != kCheckpointVersion) {
    throw Error(ErrorCode::kCorruptStream, "unsupported checkpoint version");
  }
  LearnerArch a;
  const uint32_t kind = GetU32(body, pos);
  if (kind > 2) throw Error(ErrorCode::kCorruptStream, "bad input kind");
  a.input = static_cast<InputKind>(kind);
  a.use_qtable = GetU32(body, pos) != 0;
  a.threshold = static_cast<int>(GetU32(body, pos));
  a.dilated_width = static_cast<int>(GetU32(body, pos));
  a.branch_width = static_cast<int>(GetU32(body, pos));
  a.post_width = static_cast<int>(GetU32(body, pos));
  if (a.threshold > 255 || a.dilated_width > 4096 || a.branch_width > 4096 ||
      a.post_width > 4096) {
    throw Error(ErrorCode::kCorruptStream, "implausible architecture");
  }
  LearnerParams p;
  try {
    p = ZeroParams(a);
  } catch (const Error&) {
    throw Error(ErrorCode::kCorruptStream, "invalid architecture in checkpoint");
  }
  if (GetU32(body, pos) != p.tensors.size()) {
    throw Error(ErrorCode::kCorruptStream, "tensor count mismatch");
  }
  for (ParamTensor& t : p.tensors) {
    const uint32_t len = GetU32(body, pos);
    if (pos + len > body.size() ||
        std::string(body.begin() + pos, body.begin() + pos + len) != t.name) {
      throw Error(ErrorCode::kCorruptStream, "tensor name mismatch");
    }
    pos += len;
    if (GetU32(body, pos) != t.shape.size()) {
      throw Error(ErrorCode::kCorruptStream, "tensor rank mismatch");
    }
    for (int d : t.shape) {
      if (GetU32(body, pos) != static_cast<uint32_t>(d)) {
        throw Error(ErrorCode::kCorruptStream, "tensor shape mismatch");
      }
    }
  }
  for (ParamTensor& t : p.tensors) {
    if (pos + 8 * t.values.size() > body.size()) {
      throw Error(ErrorCode::kCorruptStream, "checkpoint truncated");
    }
    for (double& v : t.values) {
      uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(body[pos + i]) << (8 * i);
      v = std::bit_cast<double>(bits);
      pos += 8;
    }
  }
  if (pos != body.size()) throw Error(ErrorCode::kCorruptStream, "trailing bytes");
  return p;
}

void SaveCheckpoint(const std::filesystem::path& path, const LearnerParams& p) {
  WriteFileAtomic(path, SerializeParams(p));
}

LearnerParams LoadCheckpoint(const std::filesystem::path& path) {
  return DeserializeParams(ReadFileBytes(path));
}

std::string HistoryCsv(const std::vector<EpochRecord>& history) {
  std::string out =
      "epoch,learning_rate,train_loss,train_acc,train_tpr,train_tnr,val_acc,val_tpr,val_tnr\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + "," + Fmt(r.learning_rate) + "," + Fmt(r.train_loss) +
           "," + Fmt(r.train.acc) + "," + Fmt(r.train.tpr) + "," + Fmt(r.train.tnr) + "," +
           Fmt(r.val.acc) + "," + Fmt(r.val.tpr) + "," + Fmt(r.val.tnr) + "\n";
  }
  return out;
}

}  // namespace dctscope
