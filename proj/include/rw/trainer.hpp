#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rw/core.hpp"
#include "rw/loss.hpp"
#include "rw/metrics.hpp"
#include "rw/rng.hpp"
#include "rw/rwmaps.hpp"
#include "rw/tinynet.hpp"

namespace rw {

// Synthetic 2-D segmentation task: background plus three concentric
// structures (outer ring, middle ring, inner disk) with jittered center and
// radii, constant per-class intensity, and additive Gaussian noise. Every
// sample contains all four classes and each foreground class stays well
// under 10% of the pixels.
struct SyntheticTask {
  int size = 64;
  int num_classes = 4;
  double noise_sigma = 0.3;
  std::array<double, 4> intensity{0.0, 0.5, 1.0, 1.5};
  std::array<double, 3> radius{9.0, 12.5, 15.5};  // inner disk, mid, outer edge
  double center_jitter = 6.0;
  double radius_jitter = 0.15;  // relative scale wobble
  std::uint64_t seed = 0;
};

struct Sample {
  Field image;      // single channel, standardized
  LabelGrid labels;
};

struct Dataset {
  std::vector<Sample> train, val;
};

namespace detail {

inline void check_task(const SyntheticTask& t) {
  if (t.size < 16) throw ConfigError("task size must be at least 16");
  if (t.num_classes != 4)
    throw ConfigError("synthetic task is defined for exactly 4 classes");
  if (!(t.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  const double reach =
      t.radius[2] * (1.0 + t.radius_jitter) + t.center_jitter;
  if (reach > t.size / 2.0 - 1.0)
    throw ConfigError("ring radii exceed the grid at maximal jitter");
  if (!(t.radius[0] > 1.0 && t.radius[0] < t.radius[1] &&
        t.radius[1] < t.radius[2]))
    throw ConfigError("ring radii must be increasing and > 1");
}

inline Sample make_sample(const SyntheticTask& t, std::uint64_t stream) {
  Rng rng(stream);
  const int S = t.size;
  const double cy = S / 2.0 + rng.uniform(-t.center_jitter, t.center_jitter);
  const double cx = S / 2.0 + rng.uniform(-t.center_jitter, t.center_jitter);
  const double scale = 1.0 + rng.uniform(-t.radius_jitter, t.radius_jitter);
  const double r0 = t.radius[0] * scale;
  const double r1 = t.radius[1] * scale;
  const double r2 = t.radius[2] * scale;

  Sample s;
  std::vector<std::uint8_t> lab(static_cast<std::size_t>(S) * S);
  s.image = Field({S, S}, 1);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      const double d = std::hypot(y + 0.5 - cy, x + 0.5 - cx);
      int cls = 0;
      if (d < r0)
        cls = 3;
      else if (d < r1)
        cls = 2;
      else if (d < r2)
        cls = 1;
      lab[static_cast<std::size_t>(y) * S + x] = static_cast<std::uint8_t>(cls);
    }
  s.labels = LabelGrid({S, S}, t.num_classes, std::move(lab));

  const Index n = s.labels.pixels();
  for (Index i = 0; i < n; ++i)
    s.image.values[i] =
        t.intensity[s.labels.labels[i]] + t.noise_sigma * rng.normal();

  // Standardize to zero mean, unit variance.
  double mean = 0.0;
  for (double v : s.image.values) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (double v : s.image.values) var += (v - mean) * (v - mean);
  var /= double(n);
  const double inv = 1.0 / std::sqrt(var);
  for (double& v : s.image.values) v = (v - mean) * inv;
  return s;
}

}  // namespace detail

inline Dataset generate_task(const SyntheticTask& t, int n_train, int n_val) {
  detail::check_task(t);
  if (n_train < 1 || n_val < 1)
    throw ConfigError("need at least one training and one validation sample");
  Dataset ds;
  for (int i = 0; i < n_train; ++i)
    ds.train.push_back(detail::make_sample(t, mix_seed(t.seed, 10000 + i)));
  for (int i = 0; i < n_val; ++i)
    ds.val.push_back(detail::make_sample(t, mix_seed(t.seed, 20000 + i)));
  for (const auto& split : {&ds.train, &ds.val})
    for (const auto& s : *split) {
      std::array<bool, 4> seen{};
      for (std::uint8_t v : s.labels.labels) seen[v] = true;
      if (!(seen[0] && seen[1] && seen[2] && seen[3]))
        throw ConfigError("generated sample is missing a class");
    }
  return ds;
}

// Training loss selection. The combined kinds pair the named partner with
// the RW loss under the (unrectified) boundary map.
enum class LossKind { rrw, rw_boundary, dice, focal, wce_rrw, dice_rw, ce_rw };

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::rrw: return "rrw";
    case LossKind::rw_boundary: return "rw_boundary";
    case LossKind::dice: return "dice";
    case LossKind::focal: return "focal";
    case LossKind::wce_rrw: return "wce_rrw";
    case LossKind::dice_rw: return "dice+rw";
    case LossKind::ce_rw: return "ce+rw";
  }
  return "?";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "rrw") return LossKind::rrw;
  if (s == "rw_boundary") return LossKind::rw_boundary;
  if (s == "dice") return LossKind::dice;
  if (s == "focal") return LossKind::focal;
  if (s == "wce_rrw") return LossKind::wce_rrw;
  if (s == "dice+rw") return LossKind::dice_rw;
  if (s == "ce+rw") return LossKind::ce_rw;
  throw ConfigError("unknown loss kind '" + s + "'");
}

inline bool is_combined(LossKind k) {
  return k == LossKind::dice_rw || k == LossKind::ce_rw;
}

struct TrainConfig {
  SyntheticTask task;
  int n_train = 32;
  int n_val = 16;
  LossKind kind = LossKind::rrw;
  CombineMode sched_mode = CombineMode::gradual;  // combined kinds only
  double sched_alpha_end = 0.01;
  double focal_gamma = 2.0;
  double dice_eps = 1e-5;
  // Harness defaults: the toy net needs a hotter learning rate than a
  // full-scale model, and the decoupled decay keeps logits small enough
  // that no class's softmax output can pin to zero mid-run.
  AdamParams adam{.lr = 1.5e-3, .weight_decay = 5e-2};
  int epochs = 50;
  int batch = 1;
  std::uint64_t run_seed = 0;
  double threshold = 0.85;  // mean foreground Dice for the converged flag
  std::string run_id;       // derived from kind and seed when empty

  std::string loss_config_name() const {
    std::string s = loss_kind_name(kind);
    if (is_combined(kind))
      s += sched_mode == CombineMode::equal ? " equal" : " gradual";
    return s;
  }

  std::string resolved_run_id() const {
    if (!run_id.empty()) return run_id;
    std::string s = loss_kind_name(kind);
    for (char& c : s)
      if (c == '+') c = '_';
    if (is_combined(kind))
      s += sched_mode == CombineMode::equal ? "_equal" : "_gradual";
    return s + "_s" + std::to_string(run_seed);
  }
};

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string loss_config;
  int num_classes = 0;
  std::vector<std::vector<double>> epoch_dice;  // [epoch][class], val means
  double final_dice = 0.0;  // mean foreground Dice of the last epoch
  bool converged = false;
  bool diverged = false;
  Index sign_checked_pixels = 0;    // sampled sign audits (rw kinds)
  Index sign_violation_pixels = 0;  // pixels with >= 2 negative components
  std::vector<double> final_class_dice;  // per class, last epoch (val mean)
  std::vector<double> final_class_hd;    // per class, mm; NaN = undefined
};

namespace detail {

struct PreparedSample {
  const Sample* s = nullptr;
  OneHot onehot;
  RWMap map;      // rw kinds and combined partners
  Field weights;  // wce only
};

inline std::vector<double> mean_class_dice(const TinyNet& net,
                                           const std::vector<Sample>& val) {
  const int K = net.num_classes;
  std::vector<double> acc(K, 0.0);
  for (const auto& s : val) {
    LogitField logits = net_forward(net, s.image);
    std::vector<std::uint8_t> pred(static_cast<std::size_t>(logits.pixels()));
    for (Index i = 0; i < logits.pixels(); ++i) {
      auto pi = logits.pixel(i);
      int best = 0;
      for (int k = 1; k < K; ++k)
        if (pi[k] > pi[best]) best = k;
      pred[i] = static_cast<std::uint8_t>(best);
    }
    LabelGrid pg(s.labels.dims, K, std::move(pred), s.labels.spacing);
    for (int k = 0; k < K; ++k)
      acc[k] += dice(class_mask(pg, k), class_mask(s.labels, k));
  }
  for (double& v : acc) v /= double(val.size());
  return acc;
}

}  // namespace detail

// One deterministic training run: TinyNet + Adam on the synthetic task with
// the configured loss. Non-finite losses or gradients mark the run diverged
// (recorded, not raised); its remaining epochs score zero Dice.
inline RunRecord train_run(const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch < 1)
    throw ConfigError("epochs and batch size must be >= 1");

  Dataset ds = generate_task(cfg.task, cfg.n_train, cfg.n_val);
  const int K = cfg.task.num_classes;

  // Per-sample ground-truth artifacts, built once.
  std::vector<detail::PreparedSample> prep(ds.train.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    auto& p = prep[i];
    p.s = &ds.train[i];
    p.onehot = one_hot(p.s->labels);
    switch (cfg.kind) {
      case LossKind::rrw:
        p.map = rrw_map(p.s->labels);
        break;
      case LossKind::rw_boundary:
      case LossKind::dice_rw:
      case LossKind::ce_rw:
        p.map = boundary_map(p.s->labels);
        break;
      case LossKind::wce_rrw: {
        RWMap z = rrw_map(p.s->labels);
        p.weights = Field(z.dims, z.channels, z.spacing);
        for (std::size_t j = 0; j < z.values.size(); ++j)
          p.weights.values[j] = std::abs(z.values[j]);
        break;
      }
      case LossKind::dice:
      case LossKind::focal:
        break;
    }
    if (cfg.kind == LossKind::ce_rw) {
      p.weights = Field(p.onehot.dims, K, p.onehot.spacing);
      for (double& v : p.weights.values) v = 1.0;
    }
  }

  const CombinedSchedule sched{cfg.sched_mode, 1.0, cfg.sched_alpha_end,
                               cfg.epochs};

  RunRecord rec;
  rec.run_id = cfg.resolved_run_id();
  rec.seed = cfg.run_seed;
  rec.loss_config = cfg.loss_config_name();
  rec.num_classes = K;

  TinyNet net = TinyNet::make(K, mix_seed(cfg.run_seed, 1));
  AdamState opt = AdamState::make(net, cfg.adam);

  std::vector<int> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);

  const bool rw_kind =
      cfg.kind == LossKind::rrw || cfg.kind == LossKind::rw_boundary;

  for (int e = 0; e < cfg.epochs && !rec.diverged; ++e) {
    Rng shuffle_rng(mix_seed(cfg.run_seed, 100 + e));
    shuffle_rng.shuffle(order);
    const bool audit_epoch =
        rw_kind && (e == 0 || e == cfg.epochs / 2 || e == cfg.epochs - 1);

    for (std::size_t start = 0; start < order.size() && !rec.diverged;
         start += cfg.batch) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      NetGrads batch_grads = NetGrads::zeros_like(net);
      double batch_loss = 0.0;
      for (std::size_t bi = start; bi < stop; ++bi) {
        const auto& p = prep[order[bi]];
        NetActivations acts;
        LogitField logits = net_forward(net, p.s->image, &acts);
        ProbField probs = softmax(logits);

        LossAndGrad lg;
        switch (cfg.kind) {
          case LossKind::rrw:
          case LossKind::rw_boundary:
            lg.value = rw_loss(probs, p.map);
            lg.grad = rw_loss_grad(probs, p.map);
            break;
          case LossKind::dice:
            lg.value = dice_loss(probs, p.onehot, cfg.dice_eps);
            lg.grad = dice_loss_grad(probs, p.onehot, cfg.dice_eps);
            break;
          case LossKind::focal:
            lg.value = focal_loss(probs, p.onehot, cfg.focal_gamma);
            lg.grad = focal_loss_grad(probs, p.onehot, cfg.focal_gamma);
            break;
          case LossKind::wce_rrw:
            lg.value = pwce_loss(probs, p.onehot, p.weights);
            lg.grad = pwce_grad(probs, p.onehot, p.weights);
            break;
          case LossKind::dice_rw: {
            LossAndGrad a{dice_loss(probs, p.onehot, cfg.dice_eps),
                          dice_loss_grad(probs, p.onehot, cfg.dice_eps)};
            LossAndGrad b{rw_loss(probs, p.map), rw_loss_grad(probs, p.map)};
            lg = combined_loss(sched, e, a, b);
            break;
          }
          case LossKind::ce_rw: {
            LossAndGrad a{pwce_loss(probs, p.onehot, p.weights),
                          pwce_grad(probs, p.onehot, p.weights)};
            LossAndGrad b{rw_loss(probs, p.map), rw_loss_grad(probs, p.map)};
            lg = combined_loss(sched, e, a, b);
            break;
          }
        }

        if (audit_epoch && start == 0) {
          SignReport rep = negcount(probs, p.map);
          rec.sign_checked_pixels += static_cast<Index>(rep.counts.size());
          rec.sign_violation_pixels += rep.pixels_two_or_more;
        }

        if (!std::isfinite(lg.value.value)) {
          rec.diverged = true;
          break;
        }
        batch_loss += lg.value.value;
        NetGrads g = net_backward(net, p.s->image, acts, lg.grad);
        batch_grads.add(g);
      }
      if (rec.diverged) break;
      batch_grads.scale(1.0 / double(stop - start));
      if (!std::isfinite(batch_loss) || !batch_grads.finite()) {
        rec.diverged = true;
        break;
      }
      adam_step(opt, net, batch_grads);
    }

    if (!rec.diverged) rec.epoch_dice.push_back(detail::mean_class_dice(net, ds.val));
  }

  // Pad diverged runs so the epoch series always has the configured length.
  while (static_cast<int>(rec.epoch_dice.size()) < cfg.epochs)
    rec.epoch_dice.emplace_back(K, 0.0);

  rec.final_class_dice.assign(K, 0.0);
  rec.final_class_hd.assign(K, std::numeric_limits<double>::quiet_NaN());
  if (!rec.diverged) {
    rec.final_class_dice = rec.epoch_dice.back();
    double s = 0.0;
    for (int k = 1; k < K; ++k) s += rec.final_class_dice[k];
    rec.final_dice = s / double(K - 1);

    // Final-state Hausdorff per class, averaged over the validation samples
    // where both masks are nonempty (NaN when no sample qualifies).
    std::vector<double> hd_sum(K, 0.0);
    std::vector<int> hd_cnt(K, 0);
    for (const auto& smp : ds.val) {
      LogitField logits = net_forward(net, smp.image);
      std::vector<std::uint8_t> pv(static_cast<std::size_t>(logits.pixels()));
      for (Index i = 0; i < logits.pixels(); ++i) {
        auto pi = logits.pixel(i);
        int best = 0;
        for (int k = 1; k < K; ++k)
          if (pi[k] > pi[best]) best = k;
        pv[i] = static_cast<std::uint8_t>(best);
      }
      LabelGrid pred(smp.labels.dims, K, std::move(pv), smp.labels.spacing);
      for (int k = 0; k < K; ++k) {
        BinaryMask pm = class_mask(pred, k), gm = class_mask(smp.labels, k);
        if (pm.count() > 0 && gm.count() > 0) {
          hd_sum[k] += hausdorff(pm, gm);
          ++hd_cnt[k];
        }
      }
    }
    for (int k = 0; k < K; ++k)
      if (hd_cnt[k] > 0) rec.final_class_hd[k] = hd_sum[k] / hd_cnt[k];
  }
  rec.converged = !rec.diverged && rec.final_dice >= cfg.threshold;
  return rec;
}

inline void write_metrics_csv(std::ostream& out,
                              const std::vector<RunRecord>& recs) {
  out << "run_id,class,dice,hd_mm\n";
  out.precision(17);
  for (const auto& r : recs)
    for (std::size_t k = 0; k < r.final_class_dice.size(); ++k) {
      out << r.run_id << ',' << k << ',' << r.final_class_dice[k] << ',';
      if (k < r.final_class_hd.size() && std::isfinite(r.final_class_hd[k]))
        out << r.final_class_hd[k];
      else
        out << "undefined";
      out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Convergence CDF and CSV export.

struct CdfTable {
  std::vector<double> level;
  std::vector<double> fraction;
};

inline CdfTable final_dice_cdf(const std::vector<double>& finals,
                               int grid_points = 51) {
  if (finals.empty()) throw DomainError("cdf of an empty run set");
  if (grid_points < 2) throw DomainError("cdf grid needs >= 2 points");
  CdfTable t;
  for (int j = 0; j < grid_points; ++j) {
    const double d = double(j) / (grid_points - 1);
    t.level.push_back(d);
    t.fraction.push_back(cdf(finals, d));
  }
  return t;
}

inline CdfTable convergence_cdf(const std::vector<RunRecord>& recs,
                                int grid_points = 51) {
  std::vector<double> finals;
  for (const auto& r : recs) finals.push_back(r.final_dice);
  return final_dice_cdf(finals, grid_points);
}

inline void write_cdf_csv(std::ostream& out, const CdfTable& t) {
  out << "dice,cdf\n";
  out.precision(17);
  for (std::size_t i = 0; i < t.level.size(); ++i)
    out << t.level[i] << ',' << t.fraction[i] << '\n';
}

inline void write_epochs_csv(std::ostream& out,
                             const std::vector<RunRecord>& recs) {
  out << "run_id,epoch,class,dice\n";
  out.precision(17);
  for (const auto& r : recs)
    for (std::size_t e = 0; e < r.epoch_dice.size(); ++e)
      for (std::size_t k = 0; k < r.epoch_dice[e].size(); ++k)
        out << r.run_id << ',' << e << ',' << k << ',' << r.epoch_dice[e][k]
            << '\n';
}

inline void write_summary_csv(std::ostream& out,
                              const std::vector<RunRecord>& recs) {
  out << "run_id,final_dice,converged\n";
  out.precision(17);
  for (const auto& r : recs)
    out << r.run_id << ',' << r.final_dice << ',' << (r.converged ? 1 : 0)
        << '\n';
}

// Minimal reader for summary CSVs (the cdf command consumes these).
struct SummaryRow {
  std::string run_id;
  double final_dice = 0.0;
  bool converged = false;
};

inline std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("run_id,final_dice,converged", 0) != 0)
    throw FormatError("summary CSV must start with run_id,final_dice,converged");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw CorruptionError("summary CSV row has too few columns: " + line);
    SummaryRow r;
    r.run_id = line.substr(0, c1);
    try {
      r.final_dice = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    } catch (const std::exception&) {
      throw CorruptionError("summary CSV has a non-numeric final_dice: " + line);
    }
    r.converged = line.substr(c2 + 1) == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// key=value run configuration files.

inline TrainConfig load_config_text(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key=value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "task.size")
        cfg.task.size = std::stoi(val);
      else if (key == "task.seed")
        cfg.task.seed = std::stoull(val);
      else if (key == "task.noise_sigma")
        cfg.task.noise_sigma = std::stod(val);
      else if (key == "train.count")
        cfg.n_train = std::stoi(val);
      else if (key == "val.count")
        cfg.n_val = std::stoi(val);
      else if (key == "loss.kind")
        cfg.kind = parse_loss_kind(val);
      else if (key == "loss.gamma")
        cfg.focal_gamma = std::stod(val);
      else if (key == "loss.epsilon")
        cfg.dice_eps = std::stod(val);
      else if (key == "sched.mode") {
        if (val == "equal")
          cfg.sched_mode = CombineMode::equal;
        else if (val == "gradual")
          cfg.sched_mode = CombineMode::gradual;
        else
          throw ConfigError("sched.mode must be equal or gradual");
      } else if (key == "sched.alpha_end")
        cfg.sched_alpha_end = std::stod(val);
      else if (key == "opt.lr")
        cfg.adam.lr = std::stod(val);
      else if (key == "opt.beta1")
        cfg.adam.beta1 = std::stod(val);
      else if (key == "opt.beta2")
        cfg.adam.beta2 = std::stod(val);
      else if (key == "opt.eps")
        cfg.adam.eps = std::stod(val);
      else if (key == "opt.weight_decay")
        cfg.adam.weight_decay = std::stod(val);
      else if (key == "run.epochs")
        cfg.epochs = std::stoi(val);
      else if (key == "run.batch")
        cfg.batch = std::stoi(val);
      else if (key == "run.seed")
        cfg.run_seed = std::stoull(val);
      else
        throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": cannot parse value '" + val + "' for " + key);
    }
  }
  return cfg;
}

inline void echo_config(std::ostream& out, const TrainConfig& cfg) {
  out << "task.size = " << cfg.task.size << '\n'
      << "task.seed = " << cfg.task.seed << '\n'
      << "task.noise_sigma = " << cfg.task.noise_sigma << '\n'
      << "train.count = " << cfg.n_train << '\n'
      << "val.count = " << cfg.n_val << '\n'
      << "loss.kind = " << loss_kind_name(cfg.kind) << '\n'
      << "loss.gamma = " << cfg.focal_gamma << '\n'
      << "loss.epsilon = " << cfg.dice_eps << '\n'
      << "sched.mode = "
      << (cfg.sched_mode == CombineMode::equal ? "equal" : "gradual") << '\n'
      << "sched.alpha_end = " << cfg.sched_alpha_end << '\n'
      << "opt.lr = " << cfg.adam.lr << '\n'
      << "opt.beta1 = " << cfg.adam.beta1 << '\n'
      << "opt.beta2 = " << cfg.adam.beta2 << '\n'
      << "opt.eps = " << cfg.adam.eps << '\n'
      << "run.epochs = " << cfg.epochs << '\n'
      << "run.batch = " << cfg.batch << '\n'
      << "run.seed = " << cfg.run_seed << '\n';
}

}  // namespace rw
