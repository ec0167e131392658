#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rw/core.hpp"
#include "rw/loss.hpp"
#include "rw/rng.hpp"
#include "rw/rwmaps.hpp"
#include "rw/tinynet.hpp"

namespace rw {

// Central finite-difference verification of analytic gradients. The FD side
// only ever calls the loss *value* paths, so it is independent of the
// hand-derived gradient code it checks.

struct GradCheckResult {
  int instances = 0;
  double max_rel_err = 0.0;
  int worst_instance = -1;
  bool pass = false;
};

namespace detail {

// Relative error of one instance: worst component mismatch, scaled by the
// largest FD component (floored, so an all-zero gradient compares cleanly).
inline double instance_rel_err(const std::vector<double>& analytic,
                               const std::vector<double>& fd) {
  double scale = 1e-12, worst = 0.0;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - fd[i]));
  return worst / scale;
}

struct LossInstance {
  LogitField logits;
  OneHot onehot;
  RWMap map;
  Field weights;
};

inline LossInstance random_loss_instance(Rng& rng) {
  const int K = static_cast<int>(rng.uniform_int(2, 5));
  const int h = static_cast<int>(rng.uniform_int(2, 8));
  const int w = static_cast<int>(rng.uniform_int(2, 8));  // N = h*w <= 64
  LossInstance in;
  in.logits = LogitField(Field({h, w}, K));
  for (double& v : in.logits.values) v = rng.uniform(-3.0, 3.0);
  in.map = RWMap({h, w}, K);
  for (double& v : in.map.values) v = rng.uniform(-2.0, 2.0);
  in.onehot = OneHot(Field({h, w}, K));
  in.weights = Field({h, w}, K);
  for (Index i = 0; i < in.onehot.pixels(); ++i) {
    const int cls = static_cast<int>(rng.uniform_int(0, K - 1));
    in.onehot.at(i, cls) = 1.0;
  }
  for (double& v : in.weights.values) v = rng.uniform(0.0, 3.0);
  return in;
}

// value(logits) and grad-wrt-logits(logits) for one loss family.
struct LossFns {
  std::function<double(const LogitField&, const LossInstance&)> value;
  std::function<LogitField(const LogitField&, const LossInstance&)> grad;
};

inline LossFns loss_fns(const std::string& kind, double focal_gamma,
                        double dice_eps) {
  LossFns f;
  if (kind == "rw") {
    f.value = [](const LogitField& x, const LossInstance& in) {
      return rw_loss(softmax(x), in.map).value;
    };
    f.grad = [](const LogitField& x, const LossInstance& in) {
      return rw_loss_grad(softmax(x), in.map);
    };
  } else if (kind == "rw2") {
    f.value = [](const LogitField& x, const LossInstance& in) {
      return rw2_loss(softmax(x), in.map).value;
    };
    f.grad = [](const LogitField& x, const LossInstance& in) {
      return rw2_loss_grad(softmax(x), in.map);
    };
  } else if (kind == "pwce") {
    f.value = [](const LogitField& x, const LossInstance& in) {
      return pwce_loss(softmax(x), in.onehot, in.weights).value;
    };
    f.grad = [](const LogitField& x, const LossInstance& in) {
      return pwce_grad(softmax(x), in.onehot, in.weights);
    };
  } else if (kind == "dice") {
    f.value = [dice_eps](const LogitField& x, const LossInstance& in) {
      return dice_loss(softmax(x), in.onehot, dice_eps).value;
    };
    f.grad = [dice_eps](const LogitField& x, const LossInstance& in) {
      return dice_loss_grad(softmax(x), in.onehot, dice_eps);
    };
  } else if (kind == "focal") {
    f.value = [focal_gamma](const LogitField& x, const LossInstance& in) {
      return focal_loss(softmax(x), in.onehot, focal_gamma).value;
    };
    f.grad = [focal_gamma](const LogitField& x, const LossInstance& in) {
      return focal_loss_grad(softmax(x), in.onehot, focal_gamma);
    };
  } else {
    throw ConfigError("unknown gradcheck loss '" + kind +
                      "' (expected rw, rw2, pwce, dice, or focal)");
  }
  return f;
}

}  // namespace detail

// FD check of one loss family's gradient with respect to the logits.
inline GradCheckResult gradcheck_loss(const std::string& kind, int instances,
                                      std::uint64_t seed, double step = 1e-6,
                                      double threshold = 1e-6,
                                      double focal_gamma = 2.0,
                                      double dice_eps = 1e-5) {
  if (instances < 1) throw DomainError("gradcheck needs >= 1 instance");
  detail::LossFns f = detail::loss_fns(kind, focal_gamma, dice_eps);
  GradCheckResult res;
  res.instances = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 700 + t));
    detail::LossInstance in = detail::random_loss_instance(rng);
    LogitField g = f.grad(in.logits, in);
    std::vector<double> fd(g.values.size());
    LogitField x = in.logits;
    for (std::size_t j = 0; j < x.values.size(); ++j) {
      const double keep = x.values[j];
      x.values[j] = keep + step;
      const double up = f.value(x, in);
      x.values[j] = keep - step;
      const double dn = f.value(x, in);
      x.values[j] = keep;
      fd[j] = (up - dn) / (2.0 * step);
    }
    const double rel = detail::instance_rel_err(g.values, fd);
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_instance = t;
    }
  }
  res.pass = res.max_rel_err < threshold;
  return res;
}

// End-to-end FD check through TinyNet: perturb individual network weights
// and compare the loss change against the backpropagated gradient.
inline GradCheckResult gradcheck_net(int instances, std::uint64_t seed,
                                     double step = 1e-5,
                                     double threshold = 1e-4,
                                     int params_per_instance = 80) {
  if (instances < 1) throw DomainError("gradcheck needs >= 1 instance");
  GradCheckResult res;
  res.instances = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 900 + t));
    const int K = 3, S = 12;
    TinyNet net = TinyNet::make(K, rng.bits());

    Field image({S, S}, 1);
    for (double& v : image.values) v = rng.normal();
    std::vector<std::uint8_t> lab(std::size_t(S) * S);
    for (auto& v : lab)
      v = static_cast<std::uint8_t>(rng.uniform_int(0, K - 1));
    LabelGrid labels({S, S}, K, std::move(lab));
    std::vector<std::string> warn;
    RWMap z = rrw_map(labels, &warn);  // random labels: tolerate empty classes

    auto loss_of = [&](const TinyNet& n) {
      return rw_loss(softmax(net_forward(n, image)), z).value;
    };

    NetActivations acts;
    LogitField logits = net_forward(net, image, &acts);
    LogitField dl = rw_loss_grad(softmax(logits), z);
    NetGrads g = net_backward(net, image, acts, dl);

    // FD over a random subset of parameters, plus every bias once.
    std::vector<double> analytic, fd;
    TinyNet probe = net;
    auto poke = [&](double& slot, double gval) {
      const double keep = slot;
      slot = keep + step;
      const double up = loss_of(probe);
      slot = keep - step;
      const double dn = loss_of(probe);
      slot = keep;
      analytic.push_back(gval);
      fd.push_back((up - dn) / (2.0 * step));
    };
    for (int p = 0; p < params_per_instance; ++p) {
      const std::size_t li = rng.uniform_int(0, net.layers.size() - 1);
      const std::size_t wi =
          rng.uniform_int(0, net.layers[li].w.size() - 1);
      poke(probe.layers[li].w[wi], g.w[li][wi]);
    }
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      const std::size_t bi = rng.uniform_int(0, net.layers[li].b.size() - 1);
      poke(probe.layers[li].b[bi], g.b[li][bi]);
    }

    const double rel = detail::instance_rel_err(analytic, fd);
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_instance = t;
    }
  }
  res.pass = res.max_rel_err < threshold;
  return res;
}

}  // namespace rw
