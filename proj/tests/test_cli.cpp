// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors
//
// Drives the umfc executable end to end through the shell.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "umfc/umfc.h"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("umfc_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // Runs `umfc <args>` inside the scratch directory; stdout goes to out.txt
  // and stderr to err.txt.
  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + UMFC_CLI_PATH + "' " + args +
                            " > out.txt 2> err.txt";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(p(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void synth(const std::string& extra = "") const {
    ASSERT_EQ(run("synth --out-prefix d " + extra), 0) << slurp("err.txt");
  }

  static constexpr const char* kData = "--test d.images.umfc --bank d.bank.umfc --names d.names.txt";

  fs::path dir_;
};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST_F(Cli, HelpOnEverySubcommand) {
  EXPECT_EQ(run("--help"), 0);
  for (const char* sub : {"fit", "predict", "transduce", "stream", "synth", "diagnose", "sweep"}) {
    EXPECT_EQ(run(std::string(sub) + " --help"), 0) << sub;
    EXPECT_NE(slurp("out.txt").find("UMFC_"), std::string::npos) << sub;
  }
  EXPECT_NE(run(""), 0);
}

TEST_F(Cli, ExitCodeContract) {
  synth();
  EXPECT_EQ(run(std::string("transduce --tau 0 ") + kData), 1);
  EXPECT_EQ(run("transduce --test missing.umfc --bank d.bank.umfc --names d.names.txt"), 2);
  EXPECT_NE(slurp("err.txt").find("missing.umfc"), std::string::npos);
  EXPECT_EQ(run("synth --dim 12 --out-prefix small"), 1);
  EXPECT_EQ(run(std::string("sweep --param bogus --values 1 ") + kData), 1);
  EXPECT_EQ(run("--no-such-flag"), 1);
  std::ofstream(p("bad.umfc")) << "garbage";
  EXPECT_EQ(run("transduce --test bad.umfc --bank d.bank.umfc --names d.names.txt"), 2);
  EXPECT_EQ(run(std::string("transduce -m 5000 ") + kData), 2);
}

TEST_F(Cli, DegenerateRowsAreFlaggedNotFatal) {
  const double rows[] = {1, 0, 1, 0, 0, 1};
  umfc_matrix* m = nullptr;
  ASSERT_EQ(umfc_matrix_new(rows, 3, 2, &m), UMFC_OK);
  ASSERT_EQ(umfc_matrix_write(m, p("x.umfc").c_str()), UMFC_OK);
  umfc_matrix_free(m);
  const char* names[] = {"a", "b"};
  const double bank[] = {1, 0, 0, 1};
  umfc_bank* b = nullptr;
  ASSERT_EQ(umfc_bank_new(bank, 2, 2, names, &b), UMFC_OK);
  ASSERT_EQ(umfc_bank_write(b, p("b.umfc").c_str(), p("n.txt").c_str()), UMFC_OK);
  umfc_bank_free(b);
  // Every row coincides with its cluster mean, so centering zeroes it.
  for (const char* m : {"3", "2"}) {
    ASSERT_EQ(run(std::string("transduce -m ") + m + " --test x.umfc --bank b.umfc --names n.txt"), 0);
    const auto rows = lines(slurp("out.txt"));
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) EXPECT_EQ(r.substr(r.rfind('\t') + 1), "1") << r;
  }
}

TEST_F(Cli, EmptyTestFile) {
  synth();
  ASSERT_EQ(run(std::string("fit --train d.images.umfc --bank d.bank.umfc --names d.names.txt --out-state s.bin")), 0);
  umfc_matrix* m = nullptr;
  ASSERT_EQ(umfc_matrix_new(nullptr, 0, 32, &m), UMFC_OK);
  ASSERT_EQ(umfc_matrix_write(m, p("empty.umfc").c_str()), UMFC_OK);
  umfc_matrix_free(m);
  EXPECT_EQ(run("predict --state s.bin --test empty.umfc --bank d.bank.umfc --names d.names.txt"), 0)
      << slurp("err.txt");
  EXPECT_EQ(slurp("out.txt"), "");
}

TEST_F(Cli, SynthIsDeterministic) {
  synth();
  const std::string a = slurp("d.images.umfc"), al = slurp("d.images.umfc.labels");
  synth();
  EXPECT_EQ(slurp("d.images.umfc"), a);
  EXPECT_EQ(slurp("d.images.umfc.labels"), al);
  EXPECT_EQ(fs::file_size(p("d.images.umfc")), 20u + 1500u * 32u * 4u);
  synth("--seed 8");
  EXPECT_NE(slurp("d.images.umfc"), a);
}

TEST_F(Cli, SpecFileAndFlagPrecedence) {
  std::ofstream(p("spec.json")) << R"({"classes": 4, "domains": 2, "dim": 16, "samples_per_cell": 3})";
  synth("--spec-file spec.json --samples-per-cell 5");
  EXPECT_EQ(fs::file_size(p("d.images.umfc")), 20u + 4u * 2u * 5u * 16u * 4u);
}

TEST_F(Cli, EnvironmentVariablesAndFlagOverride) {
  synth();
  ASSERT_EQ(run(std::string("transduce ") + kData, "UMFC_CLUSTERS=3"), 0);
  const std::string env3 = slurp("out.txt");
  ASSERT_EQ(run(std::string("transduce -m 3 ") + kData), 0);
  EXPECT_EQ(slurp("out.txt"), env3);
  ASSERT_EQ(run(std::string("transduce -m 6 ") + kData, "UMFC_CLUSTERS=3"), 0);
  const std::string flag6 = slurp("out.txt");
  ASSERT_EQ(run(std::string("transduce ") + kData), 0);
  EXPECT_EQ(slurp("out.txt"), flag6);
  EXPECT_NE(flag6, env3);
}

TEST_F(Cli, FitPredictRoundTrip) {
  synth();
  ASSERT_EQ(run(std::string("transduce --out t.tsv --out-state t.bin ") + kData), 0);
  ASSERT_EQ(run("fit --train d.images.umfc --bank d.bank.umfc --names d.names.txt --out-state s.bin"), 0);
  ASSERT_EQ(run(std::string("predict --state s.bin --out p.tsv ") + kData), 0);
  EXPECT_EQ(slurp("p.tsv"), slurp("t.tsv"));
  const auto rows = lines(slurp("p.tsv"));
  ASSERT_EQ(rows.size(), 1500u);
  EXPECT_EQ(std::count(rows[0].begin(), rows[0].end(), '\t'), 4);
  ASSERT_EQ(run(std::string("predict --state s.bin --tau 1 --out p1.tsv ") + kData), 0);
  EXPECT_NE(slurp("p1.tsv"), slurp("p.tsv"));
}

TEST_F(Cli, ReportNeedsLabels) {
  synth();
  fs::remove(p("d.images.umfc.labels"));
  EXPECT_EQ(run(std::string("transduce --report r.tsv ") + kData), 2);
  EXPECT_EQ(run(std::string("transduce ") + kData), 0);
}

TEST_F(Cli, SingleClusterTransduce) {
  synth();
  ASSERT_EQ(run(std::string("transduce -m 1 --report r.tsv ") + kData), 0) << slurp("err.txt");
  const auto r = lines(slurp("r.tsv"));
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r.back().rfind("macro", 0), 0u);
}

TEST_F(Cli, StreamFullBatchEqualsTransduce) {
  synth();
  ASSERT_EQ(run(std::string("transduce --probs a.tsv --out a_pred.tsv ") + kData), 0);
  ASSERT_EQ(run(std::string("stream --batch-size 1500 --probs b.tsv --out b_pred.tsv ") + kData), 0);
  const auto pa = lines(slurp("a_pred.tsv")), pb = lines(slurp("b_pred.tsv"));
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    std::istringstream ra(pa[i]), rb(pb[i]);
    std::string ida, idb;
    int la = -1, lb = -2;
    ra >> ida >> la;
    rb >> idb >> lb;
    ASSERT_EQ(la, lb) << i;
  }
  std::istringstream a(slurp("a.tsv")), b(slurp("b.tsv"));
  std::size_t count = 0;
  for (double x, y; a >> x && b >> y; ++count) ASSERT_NEAR(x, y, 1e-6) << count;
  EXPECT_EQ(count, 1500u * 10u);
}

TEST_F(Cli, StreamResumeMatchesOneShot) {
  synth("--samples-per-cell 10");
  ASSERT_EQ(run(std::string("stream --mode ema --batch-size 50 --out all.tsv ") + kData), 0);
  const auto all = lines(slurp("all.tsv"));
  ASSERT_EQ(all.size(), 300u);
  // Split the file through the C API and resume from the saved state.
  umfc_matrix* m = nullptr;
  ASSERT_EQ(umfc_matrix_read(p("d.images.umfc").c_str(), &m), UMFC_OK);
  std::vector<size_t> head(100), tail(200);
  for (size_t i = 0; i < 100; ++i) head[i] = i;
  for (size_t i = 0; i < 200; ++i) tail[i] = 100 + i;
  umfc_matrix *a = nullptr, *b = nullptr;
  ASSERT_EQ(umfc_matrix_subset(m, head.data(), head.size(), &a), UMFC_OK);
  ASSERT_EQ(umfc_matrix_subset(m, tail.data(), tail.size(), &b), UMFC_OK);
  ASSERT_EQ(umfc_matrix_write(a, p("a.umfc").c_str()), UMFC_OK);
  ASSERT_EQ(umfc_matrix_write(b, p("b.umfc").c_str()), UMFC_OK);
  umfc_matrix_free(a);
  umfc_matrix_free(b);
  umfc_matrix_free(m);
  const std::string bank = " --bank d.bank.umfc --names d.names.txt";
  ASSERT_EQ(run("stream --mode ema --batch-size 50 --test a.umfc --out-state s.bin --out x.tsv" + bank), 0);
  ASSERT_EQ(run("stream --batch-size 50 --state s.bin --test b.umfc --out y.tsv" + bank), 0) << slurp("err.txt");
  auto joined = lines(slurp("x.tsv"));
  for (const auto& l : lines(slurp("y.tsv"))) joined.push_back(l);
  EXPECT_EQ(joined, all);
}

TEST_F(Cli, BootstrapFlagsUncalibratedRows) {
  synth("--samples-per-cell 2");
  ASSERT_EQ(run(std::string("stream --batch-size 1 ") + kData), 0);
  const auto rows = lines(slurp("out.txt"));
  ASSERT_EQ(rows.size(), 60u);
  for (size_t i = 0; i < rows.size(); ++i) {
    const std::string flags = rows[i].substr(rows[i].rfind('\t') + 1);
    EXPECT_EQ(flags, i < 6 ? "2" : "0") << i;
  }
}

TEST_F(Cli, SingleValueSweepEqualsSingleRun) {
  synth();
  ASSERT_EQ(run(std::string("sweep --param clusters --values 4 ") + kData), 0);
  const auto sweep = lines(slurp("out.txt"));
  ASSERT_EQ(sweep.size(), 2u);
  ASSERT_EQ(run(std::string("transduce -m 4 --report r.tsv ") + kData), 0);
  const auto report = lines(slurp("r.tsv"));
  const std::string macro = report.back().substr(report.back().rfind('\t') + 1);
  std::istringstream cols(sweep[1]);
  std::string param, value, acc;
  cols >> param >> value >> acc;
  EXPECT_EQ(param, "clusters");
  EXPECT_EQ(value, "4");
  EXPECT_EQ(acc, macro);
}

TEST_F(Cli, Diagnostics) {
  synth();
  ASSERT_EQ(run(std::string("diagnose --which hist ") + kData), 0) << slurp("err.txt");
  EXPECT_EQ(lines(slurp("out.txt")).size(), 11u);
  ASSERT_EQ(run(std::string("diagnose --which probe -m 3 --domain-bank d.domains.umfc --domain-names d.domains.txt "
                            "--out pre.csv --out-post post.csv ") +
                kData),
            0)
      << slurp("err.txt");
  EXPECT_TRUE(fs::exists(p("pre.csv")));
  EXPECT_TRUE(fs::exists(p("post.csv")));
  ASSERT_EQ(run("diagnose --which direction --test d.images.umfc --domain-bank d.domains.umfc "
                "--domain-names d.domains.txt"),
            0)
      << slurp("err.txt");
  ASSERT_EQ(run("diagnose --which balance --test d.images.umfc --per-cell 60 --report short.tsv --out idx.txt"), 0)
      << slurp("err.txt");
  EXPECT_EQ(lines(slurp("idx.txt")).size(), 1501u);  // header + rows
  EXPECT_FALSE(slurp("short.tsv").empty());
  EXPECT_EQ(run("diagnose --which direction --test d.images.umfc"), 1);
}

}  // namespace
