#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include "dsh/dsh.hpp"

#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/test_util.hpp"

// Drives the installed command-line binary end to end through std::system,
// checking exit codes, stream separation, file outputs, and agreement with
// the library computed in-process.

using dsh::Index;
using dsh::Matrix;

namespace {

struct CmdResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const std::string out_path = tmp.path("cmd" + std::to_string(counter) + ".out");
  const std::string err_path = tmp.path("cmd" + std::to_string(counter) + ".err");
  ++counter;
  const std::string cmd =
      std::string(DSH_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

bool same_bytes(const std::string& a, const std::string& b) { return slurp(a) == slurp(b); }

// The evaluation pairing the binary uses: queries encoded with one modality
// against a database encoded with the other.
double library_map(const dsh::HashModel<double>& model, const dsh::PairedDataset& query,
                   const dsh::PairedDataset& db, dsh::Task task, Index cutoff) {
  const std::size_t qm = task == dsh::Task::i2t ? 0 : 1;
  const std::size_t dm = 1 - qm;
  const dsh::PackedCodes qcodes =
      dsh::pack(dsh::encode_batch(model, query.modalities[qm], Index(qm)));
  const dsh::PackedCodes dcodes = dsh::pack(dsh::encode_batch(model, db.modalities[dm], Index(dm)));
  return dsh::mean_ap(qcodes, query.labels, dcodes, db.labels, cutoff).mean;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("pipeline: synth, train, encode, eval") {
    TempDir tmp("cli_pipe");
    const std::string ds = tmp.path("ds");

    auto synth = run_cli(tmp, "synth --classes 4 --per-class 50 --dims 10 8 --noise 0.2 "
                              "--cross-noise 0.05 --seed 11 --out " + ds);
    REQUIRE(synth.status == 0);
    CHECK(synth.out.find("ds_mod0.dsm1") != std::string::npos);
    CHECK(synth.out.find("ds_mod1.dsm1") != std::string::npos);
    CHECK(synth.out.find("ds_labels.dsm1") != std::string::npos);
    CHECK(synth.err.find("200 samples") != std::string::npos);

    const std::string feats = ds + "_mod0.dsm1 " + ds + "_mod1.dsm1";
    const std::string labels = ds + "_labels.dsm1";
    const std::string run = tmp.path("run");
    auto train = run_cli(tmp, "train --features " + feats + " --labels " + labels +
                                  " --bits 16 --anchors 60 --seed 3 --out-dir " + run);
    REQUIRE(train.status == 0);
    const auto summary = nlohmann::json::parse(train.out);
    CHECK(summary.at("converged").get<bool>());
    CHECK(summary.at("config").at("bits").get<int>() == 16);
    const auto trace = summary.at("objective_trace").get<std::vector<double>>();
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i)
      CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-9) + 1e-12);
    CHECK(nlohmann::json::parse(slurp(run + "/train_summary.json")) == summary);
    CHECK(!slurp(run + "/train_log.txt").empty());

    auto encode = run_cli(tmp, "encode --model " + run + "/model.dsh1 --features " + ds +
                                   "_mod0.dsm1 --modality 0 --out " + tmp.path("q0.dsb1"));
    REQUIRE(encode.status == 0);
    const dsh::PackedCodes packed = dsh::load_packed_codes(tmp.path("q0.dsb1"));
    CHECK(packed.code_length == 16);
    CHECK(packed.count == 200);

    auto eval = run_cli(tmp, "eval --model " + run + "/model.dsh1 --features " + feats +
                                 " --labels " + labels +
                                 " --train-count 150 --split-seed 9 --report csv");
    REQUIRE(eval.status == 0);
    const auto rows = parse_csv(eval.out);
    REQUIRE(rows.size() == 3);  // header + both tasks
    CHECK(rows[0] == std::vector<std::string>{"task", "bits", "queries", "map"});
    CHECK(rows[1][0] == "I2T");
    CHECK(rows[2][0] == "T2I");
    for (int t : {1, 2}) {
      CHECK(rows[std::size_t(t)][1] == "16");
      CHECK(rows[std::size_t(t)][2] == "50");
      const double map = std::stod(rows[std::size_t(t)][3]);
      CHECK(map > 0.6);  // far above the 0.25 balanced four-class prior
      CHECK(map <= 1.0);
    }
  }

  TEST_CASE("eval: binary agrees with the library bit for bit") {
    TempDir tmp("cli_agree");
    const std::string ds = tmp.path("ds");
    REQUIRE(run_cli(tmp, "synth --classes 3 --per-class 40 --dims 8 6 --noise 0.25 "
                         "--cross-noise 0.1 --seed 19 --out " + ds).status == 0);
    const std::string feats = ds + "_mod0.dsm1 " + ds + "_mod1.dsm1";
    const std::string labels = ds + "_labels.dsm1";
    const std::string run = tmp.path("run");
    REQUIRE(run_cli(tmp, "train --features " + feats + " --labels " + labels +
                         " --bits 12 --anchors 40 --seed 2 --out-dir " + run).status == 0);

    auto eval = run_cli(tmp, "eval --model " + run + "/model.dsh1 --features " + feats +
                                 " --labels " + labels +
                                 " --train-count 90 --split-seed 4 --report csv");
    REQUIRE(eval.status == 0);
    const auto rows = parse_csv(eval.out);
    REQUIRE(rows.size() == 3);

    const dsh::HashModel<double> model = dsh::load_model(run + "/model.dsh1");
    const dsh::PairedDataset full =
        dsh::load_dataset({ds + "_mod0.dsm1", ds + "_mod1.dsm1"}, labels);
    const auto [db, query] = dsh::split(full, {90, 4});
    CHECK(std::stod(rows[1][3]) == library_map(model, query, db, dsh::Task::i2t, 0));
    CHECK(std::stod(rows[2][3]) == library_map(model, query, db, dsh::Task::t2i, 0));

    // explicit query/database files reproduce the split-mode result
    const auto qpaths = dsh::save_dataset(query, tmp.path("q"), dsh::FileFormat::dsm1);
    const auto dpaths = dsh::save_dataset(db, tmp.path("d"), dsh::FileFormat::dsm1);
    auto explicit_eval = run_cli(
        tmp, "eval --model " + run + "/model.dsh1 --query-features " + qpaths[0] + " " +
                 qpaths[1] + " --query-labels " + qpaths[2] + " --db-features " + dpaths[0] +
                 " " + dpaths[1] + " --db-labels " + dpaths[2] + " --report csv");
    REQUIRE(explicit_eval.status == 0);
    CHECK(explicit_eval.out == eval.out);
  }

  TEST_CASE("synth and train: byte-identical reruns per seed") {
    TempDir tmp("cli_seed");
    const std::string base = "synth --classes 2 --per-class 20 --dims 5 4 --noise 0.2 --seed 7 ";
    REQUIRE(run_cli(tmp, base + "--out " + tmp.path("a")).status == 0);
    REQUIRE(run_cli(tmp, base + "--out " + tmp.path("b")).status == 0);
    CHECK(same_bytes(tmp.path("a_mod0.dsm1"), tmp.path("b_mod0.dsm1")));
    CHECK(same_bytes(tmp.path("a_mod1.dsm1"), tmp.path("b_mod1.dsm1")));
    CHECK(same_bytes(tmp.path("a_labels.dsm1"), tmp.path("b_labels.dsm1")));

    REQUIRE(run_cli(tmp, "synth --classes 2 --per-class 20 --dims 5 4 --noise 0.2 --seed 8 "
                         "--out " + tmp.path("c")).status == 0);
    CHECK(!same_bytes(tmp.path("a_mod0.dsm1"), tmp.path("c_mod0.dsm1")));

    const std::string feats = tmp.path("a_mod0.dsm1") + " " + tmp.path("a_mod1.dsm1");
    const std::string train = "train --features " + feats + " --labels " + tmp.path("a_labels.dsm1") +
                              " --bits 8 --anchors 16 --max-iters 6 ";
    REQUIRE(run_cli(tmp, train + "--seed 5 --out-dir " + tmp.path("r1")).status == 0);
    REQUIRE(run_cli(tmp, train + "--seed 5 --out-dir " + tmp.path("r2")).status == 0);
    REQUIRE(run_cli(tmp, train + "--seed 6 --out-dir " + tmp.path("r3")).status == 0);
    CHECK(same_bytes(tmp.path("r1/model.dsh1"), tmp.path("r2/model.dsh1")));
    CHECK(!same_bytes(tmp.path("r1/model.dsh1"), tmp.path("r3/model.dsh1")));
  }

  TEST_CASE("train: hyper-parameters are validated before any data is read") {
    TempDir tmp("cli_validate");
    auto r = run_cli(tmp, "train --features missing0.dsm1 missing1.dsm1 --labels missing.dsm1 "
                          "--lambda -1");
    CHECK(r.status == 1);
    CHECK(r.err.find("lambda") != std::string::npos);
    CHECK(r.err.find("cannot open") == std::string::npos);
  }

  TEST_CASE("train: config file fills exactly the flags left unset") {
    TempDir tmp("cli_config");
    const std::string ds = tmp.path("ds");
    REQUIRE(run_cli(tmp, "synth --classes 2 --per-class 25 --dims 6 5 --noise 0.2 --seed 13 "
                         "--out " + ds).status == 0);
    const std::string feats = ds + "_mod0.dsm1 " + ds + "_mod1.dsm1";
    const std::string labels = ds + "_labels.dsm1";

    std::ofstream(tmp.path("hp.cfg")) << "# hyper-parameters\n"
                                      << "bits = 8\n"
                                      << "beta = 3.5\n"
                                      << "max_iters = 9\n"
                                      << "anchors = 20\n";
    auto r = run_cli(tmp, "train --features " + feats + " --labels " + labels + " --config " +
                              tmp.path("hp.cfg") + " --bits 4 --out-dir " + tmp.path("run"));
    REQUIRE(r.status == 0);
    const auto cfg = nlohmann::json::parse(r.out).at("config");
    CHECK(cfg.at("bits").get<int>() == 4);        // flag beats the file
    CHECK(cfg.at("beta").get<double>() == 3.5);   // file beats the default
    CHECK(cfg.at("max_iters").get<int>() == 9);   // underscores accepted
    CHECK(cfg.at("anchors").get<int>() == 20);
    CHECK(cfg.at("eta").get<double>() == 1.0);    // untouched default

    std::ofstream(tmp.path("bad_key.cfg")) << "bogus = 1\n";
    auto bad_key = run_cli(tmp, "train --features " + feats + " --labels " + labels +
                                    " --config " + tmp.path("bad_key.cfg"));
    CHECK(bad_key.status == 1);
    CHECK(bad_key.err.find("unknown key") != std::string::npos);

    std::ofstream(tmp.path("bad_value.cfg")) << "bits = 12x\n";
    auto bad_value = run_cli(tmp, "train --features " + feats + " --labels " + labels +
                                      " --config " + tmp.path("bad_value.cfg"));
    CHECK(bad_value.status == 1);
    CHECK(bad_value.err.find("bad value") != std::string::npos);

    auto no_file = run_cli(tmp, "train --features " + feats + " --labels " + labels +
                                    " --config " + tmp.path("missing.cfg"));
    CHECK(no_file.status != 0);
  }

  TEST_CASE("eval: pre-encoded perfect codes score exactly 1") {
    TempDir tmp("cli_codes");
    const Index classes = 3, per_class = 30, r = 16;
    Matrix codes(r, classes * per_class);
    Matrix labels = Matrix::Zero(classes, classes * per_class);
    for (Index j = 0; j < classes * per_class; ++j) {
      const Index k = j % classes;
      const std::uint64_t word = 0x9E3779B97F4A7C15ull * (std::uint64_t(k) + 1);
      for (Index i = 0; i < r; ++i) codes(i, j) = (word >> i) & 1 ? 1.0 : -1.0;
      labels(k, j) = 1.0;
    }
    dsh::save_packed_codes(dsh::pack(codes), tmp.path("codes.dsb1"));
    dsh::save_matrix_dsm1(tmp.path("labels.dsm1"), labels.transpose());

    auto r1 = run_cli(tmp, "eval --query-codes " + tmp.path("codes.dsb1") + " --db-codes " +
                               tmp.path("codes.dsb1") + " --query-labels " +
                               tmp.path("labels.dsm1") + " --db-labels " + tmp.path("labels.dsm1") +
                               " --task i2t --report csv");
    REQUIRE(r1.status == 0);
    const auto rows = parse_csv(r1.out);
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[1][3]) == 1.0);

    auto both = run_cli(tmp, "eval --query-codes " + tmp.path("codes.dsb1") + " --db-codes " +
                                 tmp.path("codes.dsb1") + " --query-labels " +
                                 tmp.path("labels.dsm1") + " --db-labels " +
                                 tmp.path("labels.dsm1"));
    CHECK(both.status == 1);  // codes mode is single-direction
  }

  TEST_CASE("eval: random codes on balanced classes score near the prior") {
    TempDir tmp("cli_random");
    const Index n = 400, q = 60, r = 16;
    dsh::Rng rng(99);
    Matrix dlabels = Matrix::Zero(2, n), qlabels = Matrix::Zero(2, q);
    for (Index j = 0; j < n; ++j) dlabels(j % 2, j) = 1.0;
    for (Index j = 0; j < q; ++j) qlabels(j % 2, j) = 1.0;
    dsh::save_packed_codes(dsh::pack(dsh::sign_matrix(dsh::normal_matrix(r, n, rng))),
                           tmp.path("db.dsb1"));
    dsh::save_packed_codes(dsh::pack(dsh::sign_matrix(dsh::normal_matrix(r, q, rng))),
                           tmp.path("q.dsb1"));
    dsh::save_matrix_dsm1(tmp.path("dl.dsm1"), dlabels.transpose());
    dsh::save_matrix_dsm1(tmp.path("ql.dsm1"), qlabels.transpose());

    auto res = run_cli(tmp, "eval --query-codes " + tmp.path("q.dsb1") + " --db-codes " +
                                tmp.path("db.dsb1") + " --query-labels " + tmp.path("ql.dsm1") +
                                " --db-labels " + tmp.path("dl.dsm1") + " --task t2i --report csv");
    REQUIRE(res.status == 0);
    const double map = std::stod(parse_csv(res.out)[1][3]);
    CHECK(map > 0.45);
    CHECK(map < 0.60);
  }

  TEST_CASE("encode: csv output matches the packed words") {
    TempDir tmp("cli_encfmt");
    const std::string ds = tmp.path("ds");
    REQUIRE(run_cli(tmp, "synth --classes 2 --per-class 15 --dims 5 4 --noise 0.2 --seed 3 "
                         "--out " + ds).status == 0);
    const std::string run = tmp.path("run");
    REQUIRE(run_cli(tmp, "train --features " + ds + "_mod0.dsm1 " + ds + "_mod1.dsm1 --labels " +
                         ds + "_labels.dsm1 --bits 8 --anchors 12 --max-iters 4 --out-dir " +
                         run).status == 0);
    REQUIRE(run_cli(tmp, "encode --model " + run + "/model.dsh1 --features " + ds +
                         "_mod1.dsm1 --modality 1 --out " + tmp.path("c.dsb1")).status == 0);
    REQUIRE(run_cli(tmp, "encode --model " + run + "/model.dsh1 --features " + ds +
                         "_mod1.dsm1 --modality 1 --codes-format csv --out " +
                         tmp.path("c.csv")).status == 0);
    const Matrix unpacked = dsh::unpack(dsh::load_packed_codes(tmp.path("c.dsb1")));
    const Matrix from_csv = dsh::load_matrix_csv(tmp.path("c.csv")).transpose();
    CHECK(unpacked == from_csv);
  }

  TEST_CASE("sweep: a single cell reproduces train plus eval") {
    TempDir tmp("cli_sweep1");
    const std::string ds = tmp.path("ds");
    REQUIRE(run_cli(tmp, "synth --classes 4 --per-class 40 --dims 8 6 --noise 0.25 "
                         "--cross-noise 0.05 --seed 17 --out " + ds).status == 0);
    const std::string feats = ds + "_mod0.dsm1 " + ds + "_mod1.dsm1";
    const std::string labels = ds + "_labels.dsm1";

    auto sweep = run_cli(tmp, "sweep --features " + feats + " --labels " + labels +
                                  " --train-count 120 --split-seed 6 --bits 8 --anchors 50 "
                                  "--seed 21 --max-iters 10");
    REQUIRE(sweep.status == 0);
    const auto rows = parse_csv(sweep.out);
    REQUIRE(rows.size() == 2);  // header + one cell
    REQUIRE(rows[0][0] == "cell");

    const dsh::PairedDataset full =
        dsh::load_dataset({ds + "_mod0.dsm1", ds + "_mod1.dsm1"}, labels);
    const auto [db, query] = dsh::split(full, {120, 6});
    dsh::TrainConfig cfg;
    cfg.bits = 8;
    cfg.anchors = 50;
    cfg.seed = 21;  // base seed + cell index 0
    cfg.max_iters = 10;
    const auto result = dsh::train(db.modalities, db.labels, cfg);
    CHECK(std::stoll(rows[1][5]) == result.iterations);
    CHECK((rows[1][6] == "1") == result.converged);
    CHECK(std::stod(rows[1][8]) == library_map(result.model, query, db, dsh::Task::i2t, 0));
    CHECK(std::stod(rows[1][9]) == library_map(result.model, query, db, dsh::Task::t2i, 0));
  }

  TEST_CASE("sweep: grid enumeration order and parallel determinism") {
    TempDir tmp("cli_sweepgrid");
    const std::string ds = tmp.path("ds");
    REQUIRE(run_cli(tmp, "synth --classes 3 --per-class 30 --dims 6 5 --noise 0.25 --seed 23 "
                         "--out " + ds).status == 0);
    const std::string args = "sweep --features " + ds + "_mod0.dsm1 " + ds + "_mod1.dsm1 " +
                             "--labels " + ds + "_labels.dsm1 --train-count 70 --anchors 30 "
                             "--max-iters 5 --bits-grid 4 8 --eta-grid 0.5 2 --beta-grid 1.5";
    auto serial = run_cli(tmp, args + " --jobs 1");
    REQUIRE(serial.status == 0);
    const auto rows = parse_csv(serial.out);
    REQUIRE(rows.size() == 5);  // header + 2 bits x 1 beta x 2 eta
    const std::vector<std::vector<std::string>> expected{{"0", "4", "0.5"},
                                                         {"1", "4", "2"},
                                                         {"2", "8", "0.5"},
                                                         {"3", "8", "2"}};
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(rows[i + 1][0] == expected[i][0]);  // cell index
      CHECK(rows[i + 1][1] == expected[i][1]);  // bits, slow axis
      CHECK(rows[i + 1][4] == expected[i][2]);  // eta, fast axis
      CHECK(rows[i + 1][3] == "1.5");           // beta from the singleton grid
    }

    auto parallel = run_cli(tmp, args + " --jobs 3");
    REQUIRE(parallel.status == 0);
    const auto prows = parse_csv(parallel.out);
    REQUIRE(prows.size() == rows.size());
    for (std::size_t i = 1; i < rows.size(); ++i)
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        if (c != 7)  // train_seconds is the only nondeterministic column
          CHECK(prows[i][c] == rows[i][c]);
  }

  TEST_CASE("sweep: anchor count drives per-cell training time") {
    TempDir tmp("cli_sweeptime");
    const std::string ds = tmp.path("ds");
    REQUIRE(run_cli(tmp, "synth --classes 4 --per-class 320 --dims 10 8 --noise 0.2 --seed 29 "
                         "--out " + ds).status == 0);
    auto sweep = run_cli(tmp, "sweep --features " + ds + "_mod0.dsm1 " + ds + "_mod1.dsm1 " +
                                  "--labels " + ds + "_labels.dsm1 --train-count 1200 "
                                  "--bits 16 --max-iters 5 --tol 0 --jobs 1 "
                                  "--anchors-grid 100 600 1100 --out " + tmp.path("grid.csv"));
    REQUIRE(sweep.status == 0);
    const auto rows = parse_csv(slurp(tmp.path("grid.csv")));
    REQUIRE(rows.size() == 4);
    const double t100 = std::stod(rows[1][7]);
    const double t600 = std::stod(rows[2][7]);
    const double t1100 = std::stod(rows[3][7]);
    CHECK(t100 < t600);
    CHECK(t600 < t1100);
  }

  TEST_CASE("unknown subcommands and missing flags fail loudly") {
    TempDir tmp("cli_err");
    CHECK(run_cli(tmp, "frobnicate").status != 0);
    CHECK(run_cli(tmp, "synth").status != 0);        // --out is required
    CHECK(run_cli(tmp, "encode --model m").status != 0);
    CHECK(run_cli(tmp, "eval --task sideways").status != 0);
  }
}
