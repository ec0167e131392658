// rwcli: command-line front end for the region-wise loss toolkit.
//
// Exit codes: 0 success, 1 validation or check failure, 2 usage error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rw.hpp"

namespace {

// Usage problems detected after CLI11 parsing (e.g. a flag required by the
// selected map kind is missing).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void echo(const std::string& key, const std::string& val) {
  std::cerr << "[config] " << key << " = " << val << '\n';
}
void echo(const std::string& key, double val) {
  std::ostringstream os;
  os.precision(17);
  os << val;
  echo(key, os.str());
}
void echo(const std::string& key, std::uint64_t val) {
  echo(key, std::to_string(val));
}
void echo(const std::string& key, int val) { echo(key, std::to_string(val)); }

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() &&
             (item[used] == ' ' || item[used] == '\t'))
        ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw UsageError("expected a comma-separated number list");
  return out;
}

// Minimal * / ? glob against a flat directory listing.
bool glob_match(const std::string& pat, const std::string& name) {
  std::size_t p = 0, n = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  namespace fs = std::filesystem;
  const auto slash = pattern.find_last_of('/');
  const std::string dir =
      slash == std::string::npos ? "." : pattern.substr(0, slash);
  const std::string base =
      slash == std::string::npos ? pattern : pattern.substr(slash + 1);
  std::vector<std::string> hits;
  if (base.find('*') == std::string::npos &&
      base.find('?') == std::string::npos) {
    if (fs::exists(pattern)) hits.push_back(pattern);
    return hits;
  }
  if (!fs::is_directory(dir)) return hits;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && glob_match(base, e.path().filename().string()))
      hits.push_back(e.path().string());
  std::sort(hits.begin(), hits.end());
  return hits;
}

rw::ProbField load_probs(const std::string& path) {
  rw::Field f = rw::read_field(path);
  rw::ProbField p(std::move(f));
  rw::validate(p, 1e-4);  // stored single precision rounds the simplex sums
  for (rw::Index i = 0; i < p.pixels(); ++i) {
    auto pi = p.pixel(i);
    double s = 0.0;
    for (double v : pi) s += v;
    for (double& v : pi) v /= s;
  }
  return p;
}

// ---------------------------------------------------------------------------

int cmd_maps(const std::string& labels_path, const std::string& out_path,
             const std::string& kind_s, double alpha, bool alpha_set,
             double beta, bool beta_set, const std::string& rectify_s,
             double rectify_c) {
  rw::LabelGrid labels = rw::read_labels(labels_path);
  rw::MapKind kind = rw::parse_map_kind(kind_s);

  echo("labels", labels_path);
  echo("kind", kind_s);
  if (kind == rw::MapKind::hd)
    echo("alpha", alpha_set ? alpha : 2.0);
  if (kind == rw::MapKind::cao) {
    if (!alpha_set || !beta_set)
      throw UsageError("map kind 'cao' requires --alpha and --beta");
    echo("alpha", alpha);
    echo("beta", beta);
  }
  echo("rectify", rectify_s);
  if (rectify_s == "constant") echo("rectify_c", rectify_c);

  rw::MapSpec spec;
  spec.kind = kind;
  spec.hd_alpha = alpha_set ? alpha : 2.0;
  spec.cao_alpha = alpha;
  spec.cao_beta = beta;
  std::vector<std::string> warnings;
  rw::RWMap z = rw::make_map(spec, labels, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  if (rectify_s != "none") {
    rw::RectifyMode mode;
    if (rectify_s == "constant")
      mode = rw::RectifyMode::constant;
    else if (rectify_s == "mean")
      mode = rw::RectifyMode::mean;
    else if (rectify_s == "max")
      mode = rw::RectifyMode::max;
    else
      throw UsageError("--rectify must be none, constant, mean, or max");
    z = rw::rectify(z, rw::one_hot(labels), mode, rectify_c);
    rw::RectificationReport rep = rw::is_rectified(z, rw::one_hot(labels));
    if (!rep)
      throw rw::DomainError("rectified map failed its own certificate");
  }

  rw::write_field(out_path, z, rw::ElemType::f32);
  std::cout << "wrote " << out_path << " (" << labels.num_classes
            << " channels)\n";
  return 0;
}

int cmd_analyze_simplex(const std::string& z_list, int res,
                        const std::string& out_csv) {
  std::vector<double> z = parse_double_list(z_list);
  echo("z", z_list);
  echo("resolution", res);
  double zmin = z[0], zmax = z[0];
  for (double v : z) {
    zmin = std::min(zmin, v);
    zmax = std::max(zmax, v);
  }
  if (zmax - zmin == 0.0)
    std::cerr << "warning: uniform map yields zero gradients everywhere; "
                 "the sweep is all zeros\n";
  rw::SimplexSweep sw = rw::simplex_sweep(z, res);
  std::cout << "samples " << sw.samples() << ", interior "
            << sw.interior_count << '\n';
  std::cout << "interior points with >=2 negative gradient components: "
            << sw.interior_two_neg << " (" << sw.frac_two_negative << ")\n";
  if (!out_csv.empty()) {
    std::ofstream f(out_csv);
    if (!f) throw rw::Error("cannot open " + out_csv);
    rw::write_sweep_csv(f, sw);
    std::cout << "wrote " << out_csv << '\n';
  }
  return 0;
}

int cmd_analyze_negcount(const std::string& probs_path,
                         const std::string& z_path,
                         const std::string& labels_path,
                         const std::string& logits_path,
                         const std::string& kind_s, double alpha,
                         bool alpha_set, double beta,
                         const std::string& out_csv) {
  const bool direct = !probs_path.empty() || !z_path.empty();
  const bool built = !labels_path.empty() || !logits_path.empty();
  if (direct == built)
    throw UsageError(
        "negcount needs either --probs and --z, or --labels, --logits and "
        "--kind");
  rw::ProbField p = [&] {
    if (direct) {
      if (probs_path.empty() || z_path.empty())
        throw UsageError("--probs and --z go together");
      echo("probs", probs_path);
      return load_probs(probs_path);
    }
    if (labels_path.empty() || logits_path.empty() || kind_s.empty())
      throw UsageError("--labels, --logits and --kind go together");
    echo("logits", logits_path);
    return rw::softmax(rw::LogitField(rw::read_field(logits_path)));
  }();
  rw::RWMap z = [&] {
    if (direct) {
      echo("z", z_path);
      return rw::RWMap(rw::read_field(z_path));
    }
    echo("labels", labels_path);
    echo("kind", kind_s);
    rw::MapSpec spec;
    spec.kind = rw::parse_map_kind(kind_s);
    spec.hd_alpha = alpha_set ? alpha : 2.0;
    spec.cao_alpha = alpha;
    spec.cao_beta = beta;
    std::vector<std::string> warnings;
    rw::RWMap m = rw::make_map(spec, rw::read_labels(labels_path), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return m;
  }();
  rw::SignReport rep = rw::negcount(p, z);
  std::cout << "pixels " << rep.counts.size() << '\n';
  for (std::size_t k = 0; k < rep.histogram.size(); ++k)
    std::cout << "neg_count " << k << ": " << rep.histogram[k] << '\n';
  std::cout << "pixels with >=2 negative components: "
            << rep.pixels_two_or_more << " (" << rep.frac_two_or_more
            << ")\n";
  if (!out_csv.empty()) {
    std::ofstream f(out_csv);
    if (!f) throw rw::Error("cannot open " + out_csv);
    rw::write_negcount_csv(f, p, z);
    std::cout << "wrote " << out_csv << '\n';
  }
  return 0;
}

int cmd_verify(const std::string& prop_s, int instances, std::uint64_t seed) {
  echo("prop", prop_s);
  echo("instances", instances);
  echo("seed", seed);
  std::vector<int> props;
  if (prop_s == "all")
    props = {1, 2, 3, 4, 5};
  else {
    try {
      props = {std::stoi(prop_s)};
    } catch (const std::exception&) {
      throw UsageError("--prop expects 1..5 or all");
    }
  }
  bool all_pass = true;
  for (int which : props) {
    rw::PropCheck c = rw::verify_prop(which, instances, seed);
    std::cout << "prop " << which << ": max discrepancy "
              << c.max_abs_discrepancy << " (bound ratio " << c.max_bound_ratio
              << "), ran " << c.ran << ", skipped " << c.skipped << " -> "
              << (c.pass ? "PASS" : "FAIL") << '\n';
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_metrics(const std::string& pred_path, const std::string& gt_path,
                const std::string& spacing_list, const std::string& run_id,
                const std::string& out_csv) {
  echo("pred", pred_path);
  echo("gt", gt_path);
  echo("run_id", run_id);
  rw::LabelGrid pred = rw::read_labels(pred_path);
  rw::LabelGrid gt = rw::read_labels(gt_path);
  if (!spacing_list.empty()) {
    const std::vector<double> sp = parse_double_list(spacing_list);
    if (sp.size() != pred.dims.size())
      throw UsageError("--spacing needs one value per grid axis");
    for (double v : sp)
      if (!(v > 0.0)) throw UsageError("--spacing values must be > 0");
    pred.spacing = sp;
    gt.spacing = sp;
  }
  const int K = std::max(pred.num_classes, gt.num_classes);

  std::ostringstream csv;
  csv << "run_id,class,dice,hd_mm\n";
  csv.precision(17);
  std::cout << "class  dice        hd_mm\n";
  for (int k = 0; k < K; ++k) {
    rw::BinaryMask pm = rw::class_mask(pred, k), gm = rw::class_mask(gt, k);
    const double d = rw::dice(pm, gm);
    std::string hd = "undefined";
    if (pm.count() > 0 && gm.count() > 0) {
      std::ostringstream os;
      os.precision(17);
      os << rw::hausdorff(pm, gm);
      hd = os.str();
    }
    std::cout << k << "      " << d << "  " << hd << '\n';
    csv << run_id << ',' << k << ',' << d << ',' << hd << '\n';
  }
  if (!out_csv.empty()) {
    std::ofstream f(out_csv);
    if (!f) throw rw::Error("cannot open " + out_csv);
    f << csv.str();
    std::cout << "wrote " << out_csv << '\n';
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& prefix) {
  std::ifstream f(config_path);
  if (!f) throw rw::Error("cannot open " + config_path);
  rw::TrainConfig cfg = rw::load_config_text(f);
  std::cerr << "[config] resolved run configuration:\n";
  rw::echo_config(std::cerr, cfg);

  rw::RunRecord rec = rw::train_run(cfg);
  std::vector<rw::RunRecord> recs{rec};

  const std::string ep = prefix + "_epochs.csv";
  const std::string su = prefix + "_summary.csv";
  const std::string me = prefix + "_metrics.csv";
  {
    std::ofstream o(ep);
    if (!o) throw rw::Error("cannot open " + ep);
    rw::write_epochs_csv(o, recs);
  }
  {
    std::ofstream o(su);
    if (!o) throw rw::Error("cannot open " + su);
    rw::write_summary_csv(o, recs);
  }
  {
    std::ofstream o(me);
    if (!o) throw rw::Error("cannot open " + me);
    rw::write_metrics_csv(o, recs);
  }
  std::cout << "run " << rec.run_id << ": final dice " << rec.final_dice
            << (rec.converged ? " (converged)" : " (not converged)")
            << (rec.diverged ? " [diverged]" : "") << '\n';
  if (rec.sign_checked_pixels > 0)
    std::cout << "sign audit: " << rec.sign_violation_pixels << " / "
              << rec.sign_checked_pixels
              << " sampled pixels with >=2 negative components\n";
  std::cout << "wrote " << ep << ", " << su << ", " << me << '\n';
  return 0;
}

int cmd_cdf(const std::string& runs_glob, const std::string& out_csv) {
  echo("runs", runs_glob);
  std::vector<std::string> files = expand_glob(runs_glob);
  if (files.empty())
    throw rw::Error("no summary CSVs match '" + runs_glob + "'");
  std::vector<double> finals;
  for (const auto& path : files) {
    std::ifstream f(path);
    if (!f) throw rw::Error("cannot open " + path);
    for (const auto& row : rw::read_summary_csv(f))
      finals.push_back(row.final_dice);
  }
  std::cout << "runs: " << finals.size() << " (from " << files.size()
            << " files)\n";
  rw::CdfTable t = rw::final_dice_cdf(finals);
  std::cout << "dice,cdf\n";
  for (std::size_t i = 0; i < t.level.size(); ++i)
    std::cout << t.level[i] << ',' << t.fraction[i] << '\n';
  if (!out_csv.empty()) {
    std::ofstream f(out_csv);
    if (!f) throw rw::Error("cannot open " + out_csv);
    rw::write_cdf_csv(f, t);
    std::cout << "wrote " << out_csv << '\n';
  }
  return 0;
}

int cmd_gradcheck(const std::string& loss, int instances,
                  std::uint64_t seed) {
  echo("loss", loss);
  echo("seed", seed);
  rw::GradCheckResult r;
  if (loss == "net") {
    const int n = instances > 0 ? instances : 3;
    echo("instances", n);
    r = rw::gradcheck_net(n, seed);
    std::cout << "end-to-end gradcheck: max rel err " << r.max_rel_err
              << " over " << r.instances << " instances -> "
              << (r.pass ? "PASS" : "FAIL") << '\n';
  } else {
    const int n = instances > 0 ? instances : 100;
    echo("instances", n);
    r = rw::gradcheck_loss(loss, n, seed);
    std::cout << "loss gradcheck (" << loss << "): max rel err "
              << r.max_rel_err << " over " << r.instances
              << " instances -> " << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"region-wise loss toolkit"};
  app.require_subcommand(1);

  // maps
  std::string m_labels, m_out, m_kind, m_rectify = "none";
  double m_alpha = 0.0, m_beta = 0.0, m_c = 0.0;
  auto* maps = app.add_subcommand("maps", "build a region-wise map");
  maps->add_option("--labels", m_labels, "label grid (.rwg or text)")
      ->required();
  maps->add_option("--kind", m_kind, "ac|boundary|rrw|hd|cao")->required();
  maps->add_option("--out", m_out, "output map file (.rwg)")->required();
  auto* m_alpha_opt =
      maps->add_option("--alpha", m_alpha, "hd exponent / cao alpha");
  auto* m_beta_opt = maps->add_option("--beta", m_beta, "cao beta");
  maps->add_option("--rectify", m_rectify, "none|constant|mean|max");
  maps->add_option("--c", m_c, "constant used by --rectify constant");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "stability diagnostics");
  analyze->require_subcommand(1);
  std::string s_z, s_out;
  int s_res = 100;
  auto* simplex =
      analyze->add_subcommand("simplex", "sweep one pixel's simplex");
  simplex->add_option("--z", s_z, "per-class map values, comma separated")
      ->required();
  simplex->add_option("--res,--resolution", s_res,
                      "grid resolution (default 100)");
  simplex->add_option("--out", s_out, "write the sweep as CSV");
  std::string n_probs, n_z, n_labels, n_logits, n_kind, n_out;
  double n_alpha = 0.0, n_beta = 0.0;
  auto* negc = analyze->add_subcommand(
      "negcount", "per-pixel negative-gradient-component counts");
  negc->add_option("--probs", n_probs, "probability field (.rwg)");
  negc->add_option("--z", n_z, "map field (.rwg)");
  negc->add_option("--labels", n_labels,
                   "label grid; builds the map via --kind");
  negc->add_option("--logits", n_logits, "logit field, softmaxed here");
  negc->add_option("--kind", n_kind, "ac|boundary|rrw|hd|cao");
  auto* n_alpha_opt =
      negc->add_option("--alpha", n_alpha, "hd exponent / cao alpha");
  negc->add_option("--beta", n_beta, "cao beta");
  negc->add_option("--out", n_out, "write per-pixel counts as CSV");

  // verify
  std::string v_prop = "all";
  int v_instances = 1000;
  std::uint64_t v_seed = 0;
  auto* verify =
      app.add_subcommand("verify", "equivalence oracles for the map family");
  verify->add_option("--prop", v_prop, "1..5 or all");
  verify->add_option("--instances", v_instances, "random instances per prop");
  verify->add_option("--seed", v_seed, "base seed");

  // metrics
  std::string t_pred, t_gt, t_spacing, t_out, t_run = "run";
  auto* metrics =
      app.add_subcommand("metrics", "Dice and Hausdorff between label grids");
  metrics->add_option("--pred", t_pred, "predicted labels")->required();
  metrics->add_option("--gt", t_gt, "reference labels")->required();
  metrics->add_option("--spacing", t_spacing,
                      "per-axis spacing in mm, comma separated");
  metrics->add_option("--run-id", t_run, "run id for the CSV");
  metrics->add_option("--out", t_out, "write metrics CSV");

  // train
  std::string r_config, r_prefix = "run";
  auto* train = app.add_subcommand("train", "one synthetic training run");
  train->add_option("--config", r_config, "key=value run configuration")
      ->required();
  train->add_option("--out", r_prefix, "output path prefix");

  // cdf
  std::string c_runs, c_out;
  auto* cdf = app.add_subcommand("cdf", "convergence CDF from summary CSVs");
  cdf->add_option("--runs", c_runs, "summary CSV path or glob")->required();
  cdf->add_option("--out", c_out, "write the CDF as CSV");

  // gradcheck
  std::string g_loss;
  int g_instances = 0;
  std::uint64_t g_seed = 0;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--loss", g_loss, "rw|rw2|pwce|dice|focal|net")
      ->required();
  gradcheck->add_option("--instances", g_instances, "random instances");
  gradcheck->add_option("--seed", g_seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (maps->parsed())
      return cmd_maps(m_labels, m_out, m_kind, m_alpha,
                      m_alpha_opt->count() > 0, m_beta,
                      m_beta_opt->count() > 0, m_rectify, m_c);
    if (simplex->parsed()) return cmd_analyze_simplex(s_z, s_res, s_out);
    if (negc->parsed())
      return cmd_analyze_negcount(n_probs, n_z, n_labels, n_logits, n_kind,
                                  n_alpha, n_alpha_opt->count() > 0, n_beta,
                                  n_out);
    if (verify->parsed()) return cmd_verify(v_prop, v_instances, v_seed);
    if (metrics->parsed()) return cmd_metrics(t_pred, t_gt, t_spacing, t_run, t_out);
    if (train->parsed()) return cmd_train(r_config, r_prefix);
    if (cdf->parsed()) return cmd_cdf(c_runs, c_out);
    if (gradcheck->parsed()) return cmd_gradcheck(g_loss, g_instances, g_seed);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const rw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
