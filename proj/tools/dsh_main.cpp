// Command-line front end: synthetic paired-modality data, training, batch
// encoding, Hamming-ranking evaluation, and hyper-parameter sweeps. Progress
// goes to stderr; machine-readable output goes to stdout or files under the
// configured output location.

#include "dsh/dsh.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace {

using nlohmann::json;

const std::map<std::string, dsh::FileFormat> kFormatNames{
    {"auto", dsh::FileFormat::auto_detect},
    {"csv", dsh::FileFormat::csv},
    {"dsm1", dsh::FileFormat::dsm1}};

void add_train_flags(CLI::App& cmd, dsh::TrainConfig& cfg, std::string& config_path) {
  cmd.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  cmd.add_option("--bits", cfg.bits, "code length in bits")->capture_default_str();
  cmd.add_option("--beta", cfg.beta, "classification loss weight")->capture_default_str();
  cmd.add_option("--eta", cfg.eta, "label factorization loss weight")->capture_default_str();
  cmd.add_option("--lambda", cfg.lambda, "ridge regularization weight")->capture_default_str();
  cmd.add_option("--gamma", cfg.gamma, "modality weight exponent, > 1")->capture_default_str();
  cmd.add_option("--anchors", cfg.anchors, "kernel anchors per modality")->capture_default_str();
  cmd.add_option("--max-iters", cfg.max_iters, "iteration cap")->capture_default_str();
  cmd.add_option("--tol", cfg.tol, "relative objective-change stop threshold")
      ->capture_default_str();
  cmd.add_option("--config", config_path, "key=value configuration file; flags override it")
      ->check(CLI::ExistingFile);
}

// Hyper-parameter file: one key=value per line, # comments, keys named after
// the flags (seed, bits, beta, eta, lambda, gamma, anchors, max-iters, tol).
// A key is ignored when its flag was given explicitly, so precedence is
// defaults < config file < command line.
void apply_config_file(const CLI::App& cmd, dsh::TrainConfig& cfg, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw dsh::IoError("cannot open config file " + path);
  auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string at = path + ":" + std::to_string(lineno) + ": ";
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(at + "expected key=value");
    std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty() || value.empty()) throw std::invalid_argument(at + "expected key=value");
    const bool integral = key == "seed" || key == "bits" || key == "anchors" || key == "max-iters";
    const bool real =
        key == "beta" || key == "eta" || key == "lambda" || key == "gamma" || key == "tol";
    if (!integral && !real) throw std::invalid_argument(at + "unknown key '" + key + "'");
    if (cmd.count("--" + key) > 0) continue;
    try {
      std::size_t used = 0;
      if (key == "seed") {
        cfg.seed = std::stoull(value, &used);
      } else if (integral) {
        const long long n = std::stoll(value, &used);
        (key == "bits" ? cfg.bits : key == "anchors" ? cfg.anchors : cfg.max_iters) =
            static_cast<dsh::Index>(n);
      } else {
        const double x = std::stod(value, &used);
        (key == "beta"     ? cfg.beta
         : key == "eta"    ? cfg.eta
         : key == "lambda" ? cfg.lambda
         : key == "gamma"  ? cfg.gamma
                           : cfg.tol) = x;
      }
      if (used != value.size()) throw std::out_of_range(value);
    } catch (const std::exception&) {
      throw std::invalid_argument(at + "bad value '" + value + "' for '" + key + "'");
    }
  }
}

std::vector<double> to_std(const dsh::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw dsh::IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw dsh::IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// synth

int run_synth(long long classes, long long per_class, const std::vector<long long>& dims,
              double noise, double cross_noise, std::uint64_t seed, dsh::FileFormat format,
              const std::string& out_stem) {
  std::vector<dsh::Index> d(dims.begin(), dims.end());
  const dsh::PairedDataset ds = dsh::synth_multimodal(
      static_cast<dsh::Index>(classes), static_cast<dsh::Index>(per_class), d, noise, cross_noise,
      seed);
  if (const auto dir = std::filesystem::path(out_stem).parent_path(); !dir.empty())
    std::filesystem::create_directories(dir);
  const std::vector<std::string> paths = dsh::save_dataset(ds, out_stem, format);
  std::fprintf(stderr, "synthesized %lld samples, %lld classes, %zu modalities\n",
               static_cast<long long>(ds.sample_count()),
               static_cast<long long>(ds.labels.rows()), ds.modalities.size());
  for (const std::string& p : paths) std::printf("%s\n", p.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

json config_json(const dsh::TrainConfig& cfg) {
  return json{{"bits", cfg.bits},           {"beta", cfg.beta},
              {"eta", cfg.eta},             {"lambda", cfg.lambda},
              {"gamma", cfg.gamma},         {"anchors", cfg.anchors},
              {"max_iters", cfg.max_iters}, {"tol", cfg.tol},
              {"seed", cfg.seed},           {"dcc_sweeps", cfg.dcc_sweeps}};
}

int run_train(const std::vector<std::string>& features, const std::string& labels,
              dsh::FileFormat format, const dsh::TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();  // fail fast, before any data is touched
  std::filesystem::create_directories(out_dir);
  const dsh::PairedDataset ds = dsh::load_dataset(features, labels, format);
  std::fprintf(stderr, "training on %lld samples, %lld classes, %lld modalities, %lld bits\n",
               static_cast<long long>(ds.sample_count()),
               static_cast<long long>(ds.labels.rows()),
               static_cast<long long>(ds.modality_count()),
               static_cast<long long>(cfg.bits));
  const dsh::TrainResult<double> result = dsh::train(ds.modalities, ds.labels, cfg);

  const std::filesystem::path dir(out_dir);
  const std::string model_path = (dir / "model.dsh1").string();
  dsh::save_model(result.model, model_path);

  std::string log;
  char line[64];
  for (std::size_t i = 0; i < result.state.objective_trace.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu %.17g\n", i, result.state.objective_trace[i]);
    log += line;
  }
  write_text_file((dir / "train_log.txt").string(), log);

  const json summary{{"model", model_path},
                     {"iterations", result.iterations},
                     {"converged", result.converged},
                     {"seconds", result.seconds},
                     {"final_objective", result.model.final_objective},
                     {"modality_weights", to_std(result.model.modality_weights)},
                     {"objective_trace", result.state.objective_trace},
                     {"config", config_json(cfg)}};
  write_text_file((dir / "train_summary.json").string(), summary.dump(2) + "\n");

  std::fprintf(stderr, "done: %lld iterations (%s) in %.2f s, objective %.6g\n",
               static_cast<long long>(result.iterations),
               result.converged ? "converged" : "iteration cap", result.seconds,
               result.model.final_objective);
  std::printf("%s\n", summary.dump().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// encode

int run_encode(const std::string& model_path, const std::string& features_path,
               dsh::FileFormat format, long long modality, const std::string& out_path,
               const std::string& codes_format) {
  const dsh::HashModel<double> model = dsh::load_model(model_path);
  const dsh::Matrix feats = dsh::load_features(features_path, format);
  const dsh::Matrix codes = dsh::encode_batch(model, feats, static_cast<dsh::Index>(modality));
  if (const auto dir = std::filesystem::path(out_path).parent_path(); !dir.empty())
    std::filesystem::create_directories(dir);
  if (codes_format == "csv") {
    dsh::save_matrix_csv(out_path, codes.transpose());
  } else {
    dsh::save_packed_codes(dsh::pack(codes), out_path);
  }
  std::fprintf(stderr, "encoded %lld samples at %lld bits -> %s\n",
               static_cast<long long>(codes.cols()), static_cast<long long>(codes.rows()),
               out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

// Codes arrive either as a packed "DSB1" file or as a CSV of +-1 rows.
dsh::PackedCodes load_codes(const std::string& path) {
  bool packed = false;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dsh::IoError("cannot open " + path);
    char magic[4];
    packed = bool(in.read(magic, 4)) && std::equal(magic, magic + 4, dsh::kCodesMagic);
  }
  if (packed) return dsh::load_packed_codes(path);
  return dsh::pack(dsh::load_matrix_csv(path).transpose());
}

std::vector<dsh::Task> tasks_from_name(const std::string& name) {
  if (name == "i2t") return {dsh::Task::i2t};
  if (name == "t2i") return {dsh::Task::t2i};
  if (name == "both") return {dsh::Task::i2t, dsh::Task::t2i};
  throw std::invalid_argument("unknown task '" + name + "' (expected i2t, t2i, or both)");
}

std::vector<dsh::MapReportRow> model_task_rows(const dsh::HashModel<double>& model,
                                               const dsh::PairedDataset& query,
                                               const dsh::PairedDataset& db,
                                               const std::vector<dsh::Task>& tasks,
                                               dsh::Index cutoff) {
  if (model.modality_count() < 2 || query.modality_count() < 2 || db.modality_count() < 2)
    throw std::invalid_argument("cross-modal evaluation needs two modalities");
  std::vector<dsh::MapReportRow> rows;
  for (dsh::Task task : tasks) {
    const std::size_t qm = task == dsh::Task::i2t ? 0 : 1;
    const std::size_t dm = 1 - qm;
    const dsh::PackedCodes qcodes = dsh::pack(
        dsh::encode_batch(model, query.modalities[qm], static_cast<dsh::Index>(qm)));
    const dsh::PackedCodes dcodes =
        dsh::pack(dsh::encode_batch(model, db.modalities[dm], static_cast<dsh::Index>(dm)));
    const dsh::ApResult ap = dsh::mean_ap(qcodes, query.labels, dcodes, db.labels, cutoff);
    rows.push_back({task, model.code_length, qcodes.count, ap.mean});
  }
  return rows;
}

std::string render_report(const std::vector<dsh::MapReportRow>& rows, const std::string& format) {
  if (format == "text") return dsh::format_map_text(rows);
  if (format == "csv") return dsh::format_map_csv(rows);
  json arr = json::array();
  for (const auto& row : rows)
    arr.push_back(json{{"task", dsh::task_name(row.task)},
                       {"bits", row.code_length},
                       {"queries", row.query_count},
                       {"map", row.map}});
  return arr.dump(2) + "\n";
}

struct EvalArgs {
  std::string model;
  std::vector<std::string> features;
  std::string labels;
  long long train_count = -1;
  std::uint64_t split_seed = 0;
  std::vector<std::string> query_features;
  std::string query_labels;
  std::vector<std::string> db_features;
  std::string db_labels;
  std::string query_codes;
  std::string db_codes;
  dsh::FileFormat format = dsh::FileFormat::auto_detect;
  std::string task = "both";
  long long cutoff = 0;
  std::string report = "text";
  std::string out_dir;
};

int run_eval(const EvalArgs& a) {
  std::vector<dsh::MapReportRow> rows;
  const auto cutoff = static_cast<dsh::Index>(a.cutoff);
  if (!a.query_codes.empty() || !a.db_codes.empty()) {
    // Pre-encoded codes: one direction per run.
    if (a.query_codes.empty() || a.db_codes.empty() || a.query_labels.empty() ||
        a.db_labels.empty())
      throw std::invalid_argument(
          "codes mode needs --query-codes, --db-codes, --query-labels, --db-labels");
    if (a.task == "both")
      throw std::invalid_argument("codes mode evaluates a single direction; pick i2t or t2i");
    const dsh::PackedCodes qcodes = load_codes(a.query_codes);
    const dsh::PackedCodes dcodes = load_codes(a.db_codes);
    const dsh::Matrix qlabels = dsh::load_labels(a.query_labels, a.format);
    const dsh::Matrix dlabels = dsh::load_labels(a.db_labels, a.format);
    const dsh::ApResult ap = dsh::mean_ap(qcodes, qlabels, dcodes, dlabels, cutoff);
    rows.push_back({tasks_from_name(a.task).front(), qcodes.code_length, qcodes.count, ap.mean});
  } else {
    const dsh::HashModel<double> model = dsh::load_model(a.model);
    const std::vector<dsh::Task> tasks = tasks_from_name(a.task);
    if (a.train_count >= 0) {
      if (a.features.empty() || a.labels.empty())
        throw std::invalid_argument("split mode needs --features and --labels");
      const dsh::PairedDataset ds = dsh::load_dataset(a.features, a.labels, a.format);
      const auto [db, query] =
          dsh::split(ds, {static_cast<dsh::Index>(a.train_count), a.split_seed});
      std::fprintf(stderr, "split: %lld database / %lld query samples\n",
                   static_cast<long long>(db.sample_count()),
                   static_cast<long long>(query.sample_count()));
      rows = model_task_rows(model, query, db, tasks, cutoff);
    } else {
      if (a.query_features.empty() || a.query_labels.empty() || a.db_features.empty() ||
          a.db_labels.empty())
        throw std::invalid_argument(
            "explicit mode needs --query-features/--query-labels/--db-features/--db-labels");
      const dsh::PairedDataset query =
          dsh::load_dataset(a.query_features, a.query_labels, a.format);
      const dsh::PairedDataset db = dsh::load_dataset(a.db_features, a.db_labels, a.format);
      rows = model_task_rows(model, query, db, tasks, cutoff);
    }
  }
  const std::string rendered = render_report(rows, a.report);
  std::fputs(rendered.c_str(), stdout);
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    const std::string ext = a.report == "json" ? ".json" : a.report == "csv" ? ".csv" : ".txt";
    write_text_file((std::filesystem::path(a.out_dir) / ("report" + ext)).string(), rendered);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::vector<std::string> features;
  std::string labels;
  dsh::FileFormat format = dsh::FileFormat::auto_detect;
  long long train_count = 0;
  std::uint64_t split_seed = 0;
  std::vector<long long> bits_grid;
  std::vector<long long> anchors_grid;
  std::vector<double> beta_grid;
  std::vector<double> eta_grid;
  long long jobs = 1;
  long long cutoff = 0;
  std::string out;
};

struct SweepRow {
  dsh::TrainConfig cfg;
  dsh::Index iterations = 0;
  bool converged = false;
  double seconds = 0.0;
  double map_i2t = 0.0;
  double map_t2i = 0.0;
  std::string error;
};

int run_sweep(const SweepArgs& a, const dsh::TrainConfig& base) {
  // Grid axes default to the base value; cells enumerate bits, anchors, beta,
  // eta with eta fastest. Each cell derives its own seed: base seed + index.
  const std::vector<long long> bits =
      a.bits_grid.empty() ? std::vector<long long>{base.bits} : a.bits_grid;
  const std::vector<long long> anchors =
      a.anchors_grid.empty() ? std::vector<long long>{base.anchors} : a.anchors_grid;
  const std::vector<double> betas = a.beta_grid.empty() ? std::vector<double>{base.beta}
                                                        : a.beta_grid;
  const std::vector<double> etas = a.eta_grid.empty() ? std::vector<double>{base.eta} : a.eta_grid;

  std::vector<dsh::TrainConfig> cells;
  for (long long b : bits)
    for (long long m : anchors)
      for (double be : betas)
        for (double et : etas) {
          dsh::TrainConfig cfg = base;
          cfg.bits = static_cast<dsh::Index>(b);
          cfg.anchors = static_cast<dsh::Index>(m);
          cfg.beta = be;
          cfg.eta = et;
          cfg.seed = base.seed + cells.size();
          cfg.validate();  // every cell, before any data is touched
          cells.push_back(cfg);
        }

  const dsh::PairedDataset ds = dsh::load_dataset(a.features, a.labels, a.format);
  const auto [train_ds, query_ds] =
      dsh::split(ds, {static_cast<dsh::Index>(a.train_count), a.split_seed});
  std::fprintf(stderr, "sweep: %zu cells, %lld train / %lld query samples\n", cells.size(),
               static_cast<long long>(train_ds.sample_count()),
               static_cast<long long>(query_ds.sample_count()));

  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SweepRow& row = rows[i];
      row.cfg = cells[i];
      try {
        const dsh::TrainResult<double> result =
            dsh::train(train_ds.modalities, train_ds.labels, row.cfg);
        row.iterations = result.iterations;
        row.converged = result.converged;
        row.seconds = result.seconds;
        const auto maps =
            model_task_rows(result.model, query_ds, train_ds,
                            {dsh::Task::i2t, dsh::Task::t2i}, static_cast<dsh::Index>(a.cutoff));
        row.map_i2t = maps[0].map;
        row.map_t2i = maps[1].map;
        const std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr,
                     "cell %zu/%zu: bits=%lld anchors=%lld beta=%g eta=%g "
                     "map_i2t=%.4f map_t2i=%.4f %.2fs\n",
                     i + 1, cells.size(), static_cast<long long>(row.cfg.bits),
                     static_cast<long long>(row.cfg.anchors), row.cfg.beta, row.cfg.eta,
                     row.map_i2t, row.map_t2i, row.seconds);
      } catch (const std::exception& e) {
        row.error = e.what();
        const std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "cell %zu/%zu failed: %s\n", i + 1, cells.size(), e.what());
      }
    }
  };

  const std::size_t pool_size =
      std::min<std::size_t>(static_cast<std::size_t>(std::max<long long>(a.jobs, 1)),
                            cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < pool_size; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::string csv = "cell,bits,anchors,beta,eta,iterations,converged,train_seconds,"
                    "map_i2t,map_t2i\n";
  char line[256];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& row = rows[i];
    std::snprintf(line, sizeof line, "%zu,%lld,%lld,%.17g,%.17g,%lld,%d,%.6f,%.17g,%.17g\n", i,
                  static_cast<long long>(row.cfg.bits), static_cast<long long>(row.cfg.anchors),
                  row.cfg.beta, row.cfg.eta, static_cast<long long>(row.iterations),
                  row.converged ? 1 : 0, row.seconds, row.map_i2t, row.map_t2i);
    csv += line;
  }
  if (a.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    if (const auto dir = std::filesystem::path(a.out).parent_path(); !dir.empty())
      std::filesystem::create_directories(dir);
    write_text_file(a.out, csv);
  }
  for (const SweepRow& row : rows)
    if (!row.error.empty()) throw std::runtime_error("sweep cell failed: " + row.error);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Supervised discrete hashing for paired multi-modal data: synthesize datasets, train "
      "unified binary codes, encode new samples, and evaluate Hamming-ranking retrieval."};
  app.require_subcommand(1);
  int rc = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic paired-modality dataset");
  long long sy_classes = 4, sy_per_class = 100;
  std::vector<long long> sy_dims{32, 24};
  double sy_noise = 0.1, sy_cross = 0.0;
  std::uint64_t sy_seed = 0;
  dsh::FileFormat sy_format = dsh::FileFormat::dsm1;
  std::string sy_out;
  synth->add_option("--classes", sy_classes, "number of classes")->capture_default_str();
  synth->add_option("--per-class", sy_per_class, "samples per class")->capture_default_str();
  synth->add_option("--dims", sy_dims, "per-modality feature dimensions")
      ->delimiter(',')
      ->capture_default_str();
  synth->add_option("--noise", sy_noise, "within-class noise scale")->capture_default_str();
  synth->add_option("--cross-noise", sy_cross, "fraction of labels to corrupt")
      ->capture_default_str();
  synth->add_option("--seed", sy_seed, "random seed")->capture_default_str();
  synth->add_option("--format", sy_format, "output file format")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case))
      ->default_str("dsm1");
  synth->add_option("--out", sy_out, "output path stem")->required();
  synth->callback([&]() {
    rc = run_synth(sy_classes, sy_per_class, sy_dims, sy_noise, sy_cross, sy_seed, sy_format,
                   sy_out);
  });

  // train
  auto* train = app.add_subcommand("train", "learn a hashing model from paired features");
  std::vector<std::string> tr_features;
  std::string tr_labels, tr_out_dir = ".";
  dsh::FileFormat tr_format = dsh::FileFormat::auto_detect;
  dsh::TrainConfig tr_cfg;
  train->add_option("--features", tr_features, "per-modality feature files")->required();
  train->add_option("--labels", tr_labels, "label file")->required();
  train->add_option("--format", tr_format, "input file format")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case))
      ->default_str("auto");
  train->add_option("--out-dir", tr_out_dir, "output directory")->capture_default_str();
  std::string tr_config_path;
  add_train_flags(*train, tr_cfg, tr_config_path);
  train->callback([&]() {
    apply_config_file(*train, tr_cfg, tr_config_path);
    rc = run_train(tr_features, tr_labels, tr_format, tr_cfg, tr_out_dir);
  });

  // encode
  auto* encode = app.add_subcommand("encode", "hash a feature file with a trained model");
  std::string en_model, en_features, en_out;
  long long en_modality = 0;
  dsh::FileFormat en_format = dsh::FileFormat::auto_detect;
  std::string en_codes_format = "packed";
  encode->add_option("--model", en_model, "model file")->required();
  encode->add_option("--features", en_features, "feature file")->required();
  encode->add_option("--modality", en_modality, "modality index of the features")
      ->capture_default_str();
  encode->add_option("--format", en_format, "input file format")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case))
      ->default_str("auto");
  encode->add_option("--codes-format", en_codes_format, "output encoding")
      ->check(CLI::IsMember({"packed", "csv"}))
      ->capture_default_str();
  encode->add_option("--out", en_out, "output code file")->required();
  encode->callback([&]() {
    rc = run_encode(en_model, en_features, en_format, en_modality, en_out, en_codes_format);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "mean average precision of Hamming ranking");
  EvalArgs ev;
  eval->add_option("--model", ev.model, "model file");
  eval->add_option("--features", ev.features, "full-dataset feature files (split mode)");
  eval->add_option("--labels", ev.labels, "full-dataset label file (split mode)");
  eval->add_option("--train-count", ev.train_count,
                   "database size; remaining samples become queries (split mode)");
  eval->add_option("--split-seed", ev.split_seed, "seed of the database/query split")
      ->capture_default_str();
  eval->add_option("--query-features", ev.query_features, "query feature files (explicit mode)");
  eval->add_option("--query-labels", ev.query_labels, "query label file");
  eval->add_option("--db-features", ev.db_features, "database feature files (explicit mode)");
  eval->add_option("--db-labels", ev.db_labels, "database label file");
  eval->add_option("--query-codes", ev.query_codes, "pre-encoded query codes (codes mode)");
  eval->add_option("--db-codes", ev.db_codes, "pre-encoded database codes (codes mode)");
  eval->add_option("--format", ev.format, "input file format")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case))
      ->default_str("auto");
  eval->add_option("--task", ev.task, "retrieval direction")
      ->check(CLI::IsMember({"i2t", "t2i", "both"}))
      ->capture_default_str();
  eval->add_option("--cutoff", ev.cutoff, "ranking depth, 0 = full database")
      ->capture_default_str();
  eval->add_option("--report", ev.report, "report format")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  eval->add_option("--out-dir", ev.out_dir, "also write the report under this directory");
  eval->callback([&]() { rc = run_eval(ev); });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid search over hyper-parameters");
  SweepArgs sw;
  dsh::TrainConfig sw_cfg;
  sweep->add_option("--features", sw.features, "per-modality feature files")->required();
  sweep->add_option("--labels", sw.labels, "label file")->required();
  sweep->add_option("--format", sw.format, "input file format")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case))
      ->default_str("auto");
  sweep->add_option("--train-count", sw.train_count, "database/training size of the split")
      ->required();
  sweep->add_option("--split-seed", sw.split_seed, "seed of the database/query split")
      ->capture_default_str();
  sweep->add_option("--bits-grid", sw.bits_grid, "code lengths to sweep")->delimiter(',');
  sweep->add_option("--anchors-grid", sw.anchors_grid, "anchor counts to sweep")->delimiter(',');
  sweep->add_option("--beta-grid", sw.beta_grid, "beta values to sweep")->delimiter(',');
  sweep->add_option("--eta-grid", sw.eta_grid, "eta values to sweep")->delimiter(',');
  sweep->add_option("--jobs", sw.jobs, "parallel workers")->capture_default_str();
  sweep->add_option("--cutoff", sw.cutoff, "ranking depth, 0 = full database")
      ->capture_default_str();
  sweep->add_option("--out", sw.out, "CSV output path (default: stdout)");
  std::string sw_config_path;
  add_train_flags(*sweep, sw_cfg, sw_config_path);
  sweep->callback([&]() {
    apply_config_file(*sweep, sw_cfg, sw_config_path);
    rc = run_sweep(sw, sw_cfg);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
