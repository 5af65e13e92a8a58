// assist2plan command-line tool.
#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "a2p/assist/http.hpp"
#include "a2p/baselines/baselines.hpp"
#include "a2p/candidates/edges.hpp"
#include "a2p/dataio/floor.hpp"
#include "a2p/dataio/manifest.hpp"
#include "a2p/dataio/session.hpp"
#include "a2p/geometry/metrics.hpp"
#include "a2p/nextwall/history.hpp"
#include "a2p/order/order.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace a2p;
using geo::WallSegment;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

struct Common {
  std::uint64_t seed = 0;
  std::string out, data, split, config;
};

// ---- flat key=value config ----

std::vector<std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::vector<std::string> args;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(no) + ": expected key=value");
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

// Moves "--config FILE" out of argv and splices the file's settings in
// right after the subcommand, so explicit flags (parsed later) win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc), cfg;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string file;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + long(i), args.begin() + long(i) + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + long(i));
    } else {
      continue;
    }
    const auto more = read_config(file);
    cfg.insert(cfg.end(), more.begin(), more.end());
    --i;
  }
  std::size_t sub = 1;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
  if (sub < args.size()) args.insert(args.begin() + long(sub) + 1, cfg.begin(), cfg.end());
  return args;
}

void record_run(const CLI::App& sub, const Common& c) {
  fs::create_directories(c.out);
  std::ofstream cfg(fs::path(c.out) / "config.txt");
  cfg << "# " << sub.get_name() << "\n";
  for (const auto* o : sub.get_options()) {
    const auto name = o->get_single_name();
    if (name.empty() || name == "help" || name == "config" || o->get_lnames().empty()) continue;
    std::string v;
    if (o->count()) {
      for (const auto& r : o->reduced_results()) v += (v.empty() ? "" : ",") + r;
    } else {
      v = o->get_default_str();
    }
    if (!v.empty()) cfg << name << "=" << v << "\n";
  }
  const json run = {{"format_version", kFormatVersion}, {"command", sub.get_name()}, {"seed", c.seed}};
  std::ofstream(fs::path(c.out) / "run.json") << run.dump(2) << "\n";
}

// ---- data ----

std::vector<data::SyntheticFloor> load_floors(const Common& c, bool density = true) {
  if (c.data.empty()) throw std::runtime_error("no data directory: pass --data or set ASSIST2PLAN_DATA");
  const fs::path root(c.data);
  std::vector<std::string> ids;
  if (fs::exists(root / "manifest.json")) {
    const auto m = data::load_manifest(root / "manifest.json");
    const auto split = c.split == "train" ? data::Split::Train : c.split == "val" ? data::Split::Val : data::Split::Test;
    ids = m.ids(split);
  } else {
    for (const auto& e : fs::directory_iterator(root))
      if (fs::exists(e.path() / "walls.json")) ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end());
  }
  if (ids.empty()) throw std::runtime_error("no floors for split '" + c.split + "' in " + root.string());
  std::vector<data::SyntheticFloor> floors;
  for (const auto& id : ids) {
    auto f = data::load_floor(root / id);
    if (!density) f.density = {};
    floors.push_back(std::move(f));
  }
  std::cerr << "loaded " << floors.size() << " floors (" << c.split << ") from " << root << "\n";
  return floors;
}

std::vector<std::vector<WallSegment>> sequences(const std::vector<data::SyntheticFloor>& floors) {
  std::vector<std::vector<WallSegment>> s;
  for (const auto& f : floors) s.push_back(f.sequence);
  return s;
}

void write_losses(const fs::path& path, const std::vector<double>& losses) {
  std::ofstream out(path);
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << "," << losses[i] << "\n";
}

svg::Series loss_series(const std::vector<double>& losses) {
  svg::Series s{"loss", {}};
  const std::size_t w = std::max<std::size_t>(1, losses.size() / 100);
  for (std::size_t i = 0; i + w <= losses.size(); i += w) {
    double m = 0;
    for (std::size_t j = i; j < i + w; ++j) m += losses[j] / double(w);
    s.points.push_back({double(i), m});
  }
  return s;
}

// "1..9" or "1,3,5"
std::vector<std::size_t> parse_lengths(const std::string& s) {
  std::vector<std::size_t> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto a = std::stoul(s.substr(0, dots)), b = std::stoul(s.substr(dots + 2));
    if (a == 0 || b < a) throw std::runtime_error("bad range " + s);
    for (auto i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoul(item));
  if (out.empty()) throw std::runtime_error("empty length list");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw std::runtime_error(std::string("missing --") + what);
  if (!fs::exists(path)) throw std::runtime_error(std::string(what) + " not found: " + path);
}

std::atomic<assist::HttpServer*> g_server{nullptr};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("assist2plan: assistive floorplan modelling tools");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::map<std::string, Common> commons;  // per subcommand
  std::map<std::string, std::function<void()>> actions;
  auto command = [&](const std::string& name, const std::string& help, const std::string& split, bool needs_out) {
    auto* sub = app.add_subcommand(name, help);
    auto& c = commons[name];
    sub->add_option("--config", c.config, "flat key=value file; flags override it");
    sub->add_option("--seed", c.seed, "random seed");
    auto* out = sub->add_option("--out", c.out, "output directory");
    if (needs_out) out->required();
    sub->add_option("--data", c.data, "data root (floor directories and manifest.json)")->envname("ASSIST2PLAN_DATA");
    sub->add_option("--split", c.split, "train, val or test")->default_val(split)->check(
        CLI::IsMember({"train", "val", "test"}));
    return sub;
  };

  // gen-floors
  {
    static std::size_t count = 20, val = 0, test = 0;
    static data::FloorParams fp;
    static bool no_density = false;
    auto* s = command("gen-floors", "generate synthetic floors with GT order, density and sessions", "train", true);
    s->add_option("--count", count, "number of floors");
    s->add_option("--val", val, "floors in the validation split");
    s->add_option("--test", test, "floors in the test split");
    s->add_option("--rooms", fp.rooms, "rooms per floor");
    s->add_option("--width", fp.width, "footprint width (in)");
    s->add_option("--height", fp.height, "footprint height (in)");
    s->add_option("--noise", fp.noise, "clutter multiplier");
    s->add_flag("--no-density", no_density, "skip density images");
    actions["gen-floors"] = [&] {
      const auto& c = commons.at("gen-floors");
      if (val + test > count) throw std::runtime_error("--val + --test exceeds --count");
      std::vector<std::pair<std::string, std::uint64_t>> entries;
      for (std::size_t i = 0; i < count; ++i) {
        const auto fseed = ad::split_seed(c.seed, "floor" + std::to_string(i));
        auto f = data::generate_synthetic_floor(fseed, fp, !no_density);
        f.id = data::floor_id_for(c.seed, i);
        data::save_floor(f, fs::path(c.out) / f.id);
        entries.emplace_back(f.id, fseed);
      }
      data::save_manifest(data::make_manifest(entries, val, test), fs::path(c.out) / "manifest.json");
      std::cout << "wrote " << count << " floors to " << c.out << "\n";
    };
  }

  // train-edge
  {
    static std::size_t steps = 0, n_ref = 16;
    static double lr = 0;
    auto* s = command("train-edge", "train the edge classifier (edge + thickness heads)", "train", true);
    s->add_option("--steps", steps, "optimizer steps")->default_val(400);
    s->add_option("--lr", lr, "learning rate")->default_val(1e-3);
    s->add_option("--n-ref", n_ref, "reference points per edge");
    actions["train-edge"] = [&] {
      const auto& c = commons.at("train-edge");
      const auto floors = load_floors(c);
      cand::EdgeClassifierConfig cfg;
      cfg.n_ref_points = n_ref;
      cand::TrainLog log;
      cand::EdgeTrainConfig tc;
      tc.steps = steps, tc.lr = lr, tc.seed = c.seed;
      const auto clf = cand::train_edge_classifier(floors, cfg, tc, &log);
      cand::save_edge_classifier(clf, fs::path(c.out) / "edge.ckpt");
      write_losses(fs::path(c.out) / "losses.csv", log.losses);
      svg::write(fs::path(c.out) / "losses.svg", svg::line_plot("edge classifier", "step", "loss", {loss_series(log.losses)}));
    };
  }

  // train-corner
  {
    static std::size_t steps = 0;
    static double lr = 0;
    auto* s = command("train-corner", "train the corner heatmap network", "train", true);
    s->add_option("--steps", steps, "optimizer steps")->default_val(1000);
    s->add_option("--lr", lr, "learning rate")->default_val(2e-3);
    actions["train-corner"] = [&] {
      const auto& c = commons.at("train-corner");
      const auto floors = load_floors(c);
      cand::TrainLog log;
      cand::CornerTrainConfig tc;
      tc.steps = steps, tc.lr = lr, tc.seed = c.seed;
      const auto m = cand::train_corner_scorer(floors, tc, &log);
      cand::save_corner_scorer(m, fs::path(c.out) / "corner.ckpt");
      write_losses(fs::path(c.out) / "losses.csv", log.losses);
    };
  }

  // train-next-wall
  {
    static std::size_t steps = 0, batch = 0, blocks = 6;
    static double lr = 0, history_cutoff = 0;
    auto* s = command("train-next-wall", "train the next-wall transformer", "train", true);
    s->add_option("--steps", steps, "optimizer steps")->default_val(1500);
    s->add_option("--batch", batch, "sequences per step")->default_val(8);
    s->add_option("--lr", lr, "learning rate")->default_val(2e-4);
    s->add_option("--blocks", blocks, "encoder blocks");
    s->add_option("--history-cutoff", history_cutoff, "probability of cutting the recency window")->default_val(0.5);
    actions["train-next-wall"] = [&] {
      const auto& c = commons.at("train-next-wall");
      const auto floors = load_floors(c, false);
      nw::NextWallConfig cfg;
      cfg.encoder.blocks = blocks;
      nw::NextWallTrainConfig tc;
      tc.steps = steps, tc.batch = batch, tc.lr = lr, tc.history_cutoff = history_cutoff, tc.seed = c.seed;
      nw::NextWallTrainLog log;
      const auto m = nw::train_next_wall(sequences(floors), cfg, tc, &log);
      nw::save_next_wall(m, fs::path(c.out) / "next_wall.ckpt");
      write_losses(fs::path(c.out) / "losses.csv", log.losses);
      svg::write(fs::path(c.out) / "losses.svg", svg::line_plot("next-wall", "step", "triplet loss", {loss_series(log.losses)}));
    };
  }

  // train-classifier
  {
    static std::size_t steps = 0, batch = 0, blocks = 6;
    static double lr = 0;
    auto* s = command("train-classifier", "train the sequence-classifier baseline", "train", true);
    s->add_option("--steps", steps, "optimizer steps")->default_val(1000);
    s->add_option("--batch", batch, "examples per step")->default_val(8);
    s->add_option("--lr", lr, "learning rate")->default_val(2e-4);
    s->add_option("--blocks", blocks, "encoder blocks");
    actions["train-classifier"] = [&] {
      const auto& c = commons.at("train-classifier");
      const auto floors = load_floors(c, false);
      nw::NextWallConfig cfg;
      cfg.encoder.blocks = blocks;
      base::ClassifierTrainConfig tc;
      tc.steps = steps, tc.batch = batch, tc.lr = lr, tc.seed = c.seed;
      const auto m = base::train_classifier(sequences(floors), cfg, tc);
      base::save_classifier(m, fs::path(c.out) / "classifier.ckpt");
    };
  }

  // train-tcn
  {
    static std::size_t steps = 0, batch = 0;
    static double lr = 0;
    auto* s = command("train-tcn", "train the TCN sequence autoencoder for the order metric", "train", true);
    s->add_option("--steps", steps, "iterations")->default_val(5000);
    s->add_option("--batch", batch, "sequences per iteration")->default_val(32);
    s->add_option("--lr", lr, "learning rate")->default_val(5e-4);
    actions["train-tcn"] = [&] {
      const auto& c = commons.at("train-tcn");
      const auto floors = load_floors(c, false);
      order::TcnTrainConfig tc;
      tc.iterations = steps, tc.batch = batch, tc.lr = lr, tc.seed = c.seed;
      std::vector<double> losses;
      const auto m = order::train_tcn(sequences(floors), {}, tc, &losses);
      order::save_tcn(m, fs::path(c.out) / "tcn.ckpt");
      write_losses(fs::path(c.out) / "losses.csv", losses);
      svg::write(fs::path(c.out) / "losses.svg", svg::line_plot("TCN autoencoder", "iteration", "L2", {loss_series(losses)}));
    };
  }

  // eval-recon
  {
    static std::string edge_ckpt, corner_ckpt, thresholds = "10,20,30";
    static double prob_threshold = 0.5, corner_sigma = 0, corner_drop = 0;
    auto* s = command("eval-recon", "wall reconstruction precision/recall/F1/IoU/width accuracy", "test", true);
    s->add_option("--edge", edge_ckpt, "edge classifier checkpoint")->required();
    s->add_option("--corners", corner_ckpt, "corner network checkpoint; GT corners when absent");
    s->add_option("--corner-sigma", corner_sigma, "GT corner jitter (in)");
    s->add_option("--corner-drop", corner_drop, "GT corner drop probability");
    s->add_option("--thresholds", thresholds, "match thresholds (in), comma separated");
    s->add_option("--prob-threshold", prob_threshold, "edge probability threshold");
    actions["eval-recon"] = [&] {
      const auto& c = commons.at("eval-recon");
      require_file(edge_ckpt, "edge");
      const auto clf = cand::load_edge_classifier(edge_ckpt);
      std::optional<cand::CornerScorer> scorer;
      if (!corner_ckpt.empty()) {
        require_file(corner_ckpt, "corners");
        scorer = cand::load_corner_scorer(corner_ckpt);
      }
      const auto floors = load_floors(c);
      std::vector<double> ths;
      for (const auto& t : split_list(thresholds)) ths.push_back(std::stod(t));
      std::vector<geo::MatchReport> sum(ths.size());
      std::vector<std::size_t> width_floors(ths.size(), 0);
      for (std::size_t i = 0; i < floors.size(); ++i) {
        const auto& f = floors[i];
        const auto det = scorer ? cand::CornerDetector::learned(*scorer)
                                : cand::CornerDetector::oracle(f.graph(), corner_sigma, corner_drop,
                                                               ad::split_seed(c.seed, f.id));
        const auto corners = cand::detect_corners(f.density, det);
        cand::EnumerateOptions opts;
        opts.prob_threshold = prob_threshold;
        std::vector<WallSegment> pred;
        for (const auto& cd : cand::enumerate_and_classify(corners, f.density, clf, opts).candidates)
          pred.push_back(cd.wall);
        pred = geo::remove_duplicates(pred, {});
        for (std::size_t t = 0; t < ths.size(); ++t) {
          const auto m = geo::match_walls(pred, f.sequence, ths[t]);
          sum[t].precision += m.precision, sum[t].recall += m.recall, sum[t].f1 += m.f1, sum[t].iou += m.iou;
          if (m.width_pairs) sum[t].width_accuracy += m.width_accuracy, ++width_floors[t];
        }
        if (i == 0)
          svg::write(fs::path(c.out) / ("recon_" + f.id + ".svg"),
                     svg::floor_plan(f.id + ": GT (grey) vs predicted (red)",
                                     {{f.sequence, "#999999"}, {pred, "#d62728", true}}));
      }
      std::ostringstream out;
      out << "threshold,precision,recall,f1,iou,width_accuracy,floors\n";
      const double n = double(floors.size());
      for (std::size_t t = 0; t < ths.size(); ++t) {
        out << ths[t] << "," << sum[t].precision / n << "," << sum[t].recall / n << "," << sum[t].f1 / n << ","
            << sum[t].iou / n << "," << (width_floors[t] ? sum[t].width_accuracy / double(width_floors[t]) : 0.0)
            << "," << floors.size() << "\n";
      }
      std::ofstream(fs::path(c.out) / "recon.csv") << out.str();
      std::cout << out.str();
    };
  }

  // eval-order
  {
    static std::string tcn_ckpt, nw_ckpt, clf_ckpt, methods, lengths, start;
    static std::size_t seqs = 100;
    auto* s = command("eval-order", "Frechet order metric per rollout length and method", "test", true);
    s->add_option("--tcn", tcn_ckpt, "TCN checkpoint")->required();
    s->add_option("--next-wall", nw_ckpt, "next-wall checkpoint (method nextwall)");
    s->add_option("--classifier", clf_ckpt, "classifier checkpoint (method classifier)");
    s->add_option("--methods", methods, "comma separated: nextwall,heuristic,classifier,random")
        ->default_val("nextwall,heuristic,classifier,random");
    s->add_option("--lengths", lengths, "rollout lengths, a..b or a,b,c")->default_val("1..10");
    s->add_option("--sequences", seqs, "evaluation sequences per length");
    s->add_option("--start", start, "gt-prefix, first-wall or random-wall")->default_val("gt-prefix")->check(
        CLI::IsMember({"gt-prefix", "first-wall", "random-wall"}));
    actions["eval-order"] = [&] {
      const auto& c = commons.at("eval-order");
      require_file(tcn_ckpt, "tcn");
      const auto tcn = order::load_tcn(tcn_ckpt);
      std::optional<nw::NextWallModel> nwm;
      std::optional<base::ClassifierModel> clf;
      std::vector<std::pair<std::string, order::SequenceGenerator>> gens;
      for (const auto& m : split_list(methods)) {
        if (m == "nextwall") {
          require_file(nw_ckpt, "next-wall");
          nwm = nw::load_next_wall(nw_ckpt);
          gens.emplace_back(m, order::predictor_generator(*nwm));
        } else if (m == "classifier") {
          require_file(clf_ckpt, "classifier");
          clf = base::load_classifier(clf_ckpt);
          gens.emplace_back(m, order::classifier_generator(*clf));
        } else if (m == "heuristic") {
          gens.emplace_back(m, order::heuristic_generator());
        } else if (m == "random") {
          gens.emplace_back(m, order::random_generator());
        } else {
          throw std::runtime_error("unknown method " + m);
        }
      }
      std::vector<order::OrderFloor> floors;
      for (const auto& f : load_floors(c, false)) floors.push_back({f.sequence, f.sequence});
      order::OrderEvalConfig ec;
      ec.lengths = parse_lengths(lengths);
      ec.sequences = seqs;
      ec.start = start == "first-wall"    ? order::StartPolicy::FirstWall
                 : start == "random-wall" ? order::StartPolicy::RandomWall
                                          : order::StartPolicy::GtPrefix;
      ec.seed = c.seed;
      const auto rows = order::evaluate_order(tcn, floors, gens, ec);
      std::ofstream(fs::path(c.out) / "order.csv") << order::order_csv(rows);
      std::map<std::string, svg::Series> by;
      for (const auto& r : rows) {
        by[r.method].name = r.method;
        by[r.method].points.push_back({double(r.length), r.score});
      }
      std::vector<svg::Series> series;
      for (auto& [k, v] : by) series.push_back(v);
      svg::write(fs::path(c.out) / "order.svg", svg::line_plot("sequence length vs Frechet", "rollout length", "Frechet", series));
      std::cout << order::order_csv(rows);
    };
  }

  // eval-history
  {
    static std::string nw_ckpt, lengths, protocol;
    auto* s = command("eval-history", "next-wall accuracy and entropy vs history length", "test", true);
    s->add_option("--next-wall", nw_ckpt, "next-wall checkpoint")->required();
    s->add_option("--lengths", lengths, "history lengths 1..H")->default_val("1..9");
    s->add_option("--protocol", protocol, "fixed-targets or prefix")->default_val("fixed-targets")->check(
        CLI::IsMember({"fixed-targets", "prefix"}));
    actions["eval-history"] = [&] {
      const auto& c = commons.at("eval-history");
      require_file(nw_ckpt, "next-wall");
      const auto m = nw::load_next_wall(nw_ckpt);
      const auto ls = parse_lengths(lengths);
      if (ls.front() != 1 || ls.back() != ls.size()) throw std::runtime_error("--lengths must be 1..H");
      const auto rows = nw::history_length_table(
          m, sequences(load_floors(c, false)), ls.back(), 10,
          protocol == "prefix" ? nw::HistoryProtocol::Prefix : nw::HistoryProtocol::FixedTargets);
      std::ofstream(fs::path(c.out) / "history.csv") << nw::history_csv(rows);
      std::vector<double> h, a, e;
      svg::Series sa{"accuracy", {}}, se{"entropy (bits)", {}};
      for (const auto& r : rows) {
        h.push_back(double(r.length)), a.push_back(r.accuracy), e.push_back(r.entropy_bits);
        sa.points.push_back({double(r.length), r.accuracy});
        se.points.push_back({double(r.length), r.entropy_bits});
      }
      json stats = {{"accuracy_spearman", nw::spearman(h, a)}, {"entropy_spearman", nw::spearman(h, e)}};
      if (h.size() <= 10) {
        stats["accuracy_p"] = nw::spearman_p_value(h, a, nw::Tail::Greater);
        stats["entropy_p"] = nw::spearman_p_value(h, e, nw::Tail::Less);
      }
      std::ofstream(fs::path(c.out) / "history_stats.json") << stats.dump(2) << "\n";
      svg::write(fs::path(c.out) / "history_accuracy.svg", svg::line_plot("accuracy vs history length", "history length", "top-1 accuracy", {sa}));
      svg::write(fs::path(c.out) / "history_entropy.svg", svg::line_plot("entropy vs history length", "history length", "bits", {se}));
      std::cout << nw::history_csv(rows) << stats.dump() << "\n";
    };
  }

  // replay
  {
    static std::string sessions_dir;
    auto* s = command("replay", "replay session_NNN.json files into a wall sequence", "train", false);
    s->add_option("sessions", sessions_dir, "directory holding session_NNN.json")->required();
    actions["replay"] = [&] {
      const auto& c = commons.at("replay");
      const auto sessions = data::load_sessions(sessions_dir);
      const auto r = data::replay(sessions);
      json walls = json::array();
      std::vector<WallSegment> ws;
      for (const auto& w : r.sequence) {
        auto j = assist::wall_to_json(w.wall);
        j["id"] = w.id;
        walls.push_back(j);
        ws.push_back(w.wall);
      }
      std::cout << sessions.size() << " sessions, " << r.sequence.size() << " walls\n";
      if (!c.out.empty()) {
        fs::create_directories(c.out);
        std::ofstream(fs::path(c.out) / "replay.json") << walls.dump(2) << "\n";
        svg::write(fs::path(c.out) / "replay.svg", svg::floor_plan("replayed walls", {{ws, "#1f77b4", false, true}}));
      } else {
        std::cout << walls.dump(2) << "\n";
      }
    };
  }

  // serve
  {
    static std::string nw_ckpt, edge_ckpt, corner_ckpt, host = "127.0.0.1";
    static int port = 8080;
    static std::size_t proposals = 10;
    auto* s = command("serve", "run the assist HTTP service", "test", false);
    s->add_option("--next-wall", nw_ckpt, "next-wall checkpoint")->required();
    s->add_option("--edge", edge_ckpt, "edge classifier checkpoint");
    s->add_option("--corners", corner_ckpt, "corner network checkpoint");
    s->add_option("--host", host, "bind address");
    s->add_option("--port", port, "port (0 picks one)");
    s->add_option("--proposals", proposals, "default proposal length");
    actions["serve"] = [&] {
      require_file(nw_ckpt, "next-wall");
      assist::Models models;
      models.next_wall = std::make_shared<const nw::NextWallModel>(nw::load_next_wall(nw_ckpt));
      if (!edge_ckpt.empty()) {
        require_file(edge_ckpt, "edge");
        models.edges = std::make_shared<const cand::EdgeClassifier>(cand::load_edge_classifier(edge_ckpt));
      }
      if (!corner_ckpt.empty()) {
        require_file(corner_ckpt, "corners");
        models.corners = std::make_shared<const cand::CornerScorer>(cand::load_corner_scorer(corner_ckpt));
      }
      assist::ServiceConfig cfg;
      cfg.default_proposals = proposals;
      assist::AssistService svc(models, cfg);
      assist::HttpServer server(svc);
      const int bound = server.bind(host, port);
      if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (auto* s = g_server.load()) s->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (auto* s = g_server.load()) s->stop();
      });
      server.serve();
      g_server = nullptr;
    };
  }

  try {
    const auto args = expand_config(argc, argv);
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(int(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  try {
    const auto& c = commons.at(sub->get_name());
    if (!c.out.empty()) record_run(*sub, c);
    const auto t0 = std::chrono::steady_clock::now();
    actions.at(sub->get_name())();
    std::cerr << sub->get_name() << " done in "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
