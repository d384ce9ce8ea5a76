// SPDX-License-Identifier: Apache-2.0
//
// Test oracles kept independent of the library's own machinery: central
// finite differences and straight-line reimplementations of the forward
// pass.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gatsv/gat.hpp"
#include "gatsv/graph.hpp"
#include "gatsv/numeric.hpp"
#include "gatsv/rng.hpp"
#include "gatsv/tape.hpp"

namespace gatsv::support {

inline Mat random_mat(Rng& rng, std::size_t rows, std::size_t cols, double sd = 1.0) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = sd * rng.gaussian();
  return m;
}

inline UtteranceSSEs random_utterance(Rng& rng, std::string id, std::size_t segments,
                                      std::size_t d) {
  return UtteranceSSEs(std::move(id), random_mat(rng, segments, d));
}

// Central differences of `f` with respect to every entry of every param.
inline std::vector<Mat> finite_difference(const std::vector<Param*>& params,
                                          const std::function<double()>& f, double h = 1e-5) {
  std::vector<Mat> out;
  for (Param* p : params) {
    Mat g(p->value.rows(), p->value.cols());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + h;
      const double up = f();
      x = saved - h;
      const double down = f();
      x = saved;
      g.data()[i] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// max |a - n| / max(|a|, |n|) over entries where max(|a|, |n|) > floor.
inline double worst_relative_error(const std::vector<Param*>& params,
                                   const std::vector<Mat>& numeric, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < numeric[k].size(); ++i) {
      const double a = params[k]->grad.data()[i];
      const double n = numeric[k].data()[i];
      const double scale = std::max(std::abs(a), std::abs(n));
      if (scale > floor) worst = std::max(worst, std::abs(a - n) / scale);
    }
  }
  return worst;
}

// Analytic gradient via the tape, then the worst relative error against
// finite differences.
inline double tape_vs_fd(const std::vector<Param*>& params,
                         const std::function<Var(Tape&)>& build, double h = 1e-5) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(build(tape));
  }
  auto f = [&] {
    Tape tape;
    return build(tape).value().scalar_value();
  };
  return worst_relative_error(params, finite_difference(params, f, h));
}

// Straight-line forward pass with plain loops.
namespace naive {

inline std::vector<double> affine(const std::vector<double>& x, const Linear& l) {
  std::vector<double> y(l.out_dim());
  for (std::size_t j = 0; j < y.size(); ++j) {
    double s = l.bias.value(0, j);
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * l.weight.value(i, j);
    y[j] = s;
  }
  return y;
}

using Nodes = std::vector<std::vector<double>>;

inline Nodes to_nodes(const Mat& m) {
  Nodes n(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) n[r].assign(m.row(r).begin(), m.row(r).end());
  return n;
}

inline std::vector<std::vector<double>> logits(const GatLayer& layer, const Nodes& h,
                                               std::span<const Membership> tags) {
  const std::size_t n = h.size();
  std::vector<std::vector<double>> g(n, std::vector<double>(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<double> prod(h[u].size());
      for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = h[u][i] * h[v][i];
      g[u][v] = affine(prod, tags[u] == tags[v] ? layer.theta_same : layer.theta_cross)[0];
    }
  return g;
}

inline Nodes layer(const GatLayer& layer, const Nodes& h, std::span<const Membership> tags) {
  const auto g = logits(layer, h, tags);
  const std::size_t n = h.size();
  Nodes out(n);
  for (std::size_t u = 0; u < n; ++u) {
    double mx = g[u][0];
    for (double x : g[u]) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : g[u]) z += std::exp(x - mx);
    std::vector<double> m(h[0].size(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      const double a = std::exp(g[u][v] - mx) / z;
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += a * h[v][i];
    }
    auto p = affine(m, layer.phi);
    auto q = affine(h[u], layer.psi);
    out[u].resize(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) out[u][j] = std::max(0.0, p[j] + q[j]);
  }
  return out;
}

inline double score(const GatModel& model, const TrialGraph& graph) {
  Nodes h = to_nodes(graph.nodes());
  for (const GatLayer& l : model.layers()) h = layer(l, h, graph.membership());
  double s = 0.0;
  for (const auto& node : h) s += affine(node, model.output())[0];
  return s / static_cast<double>(h.size());
}

}  // namespace naive

}  // namespace gatsv::support
