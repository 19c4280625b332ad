// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "umfc/io.hpp"
#include "umfc/synth.hpp"

namespace fs = std::filesystem;

namespace umfc {
namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("umfc_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

ErrorCode code_of_parse(const std::string& bytes) {
  try {
    io::parse_embeddings(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parse succeeded";
  return ErrorCode::InvalidArgument;
}

void put_u32(std::string& s, std::size_t at, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s[at + b] = static_cast<char>((v >> (8 * b)) & 0xFFu);
}

TEST_F(IoTest, IdentityFileSize) {
  io::write_embeddings(EmbeddingMatrix(Matrix{{1, 0}, {0, 1}}), path("id.umfc"));
  EXPECT_EQ(fs::file_size(path("id.umfc")), 36u);
  EXPECT_FALSE(fs::exists(io::labels_path(path("id.umfc"))));
}

TEST_F(IoTest, HeaderLayout) {
  const std::string bytes = io::encode_embeddings(Matrix{{1.5f, -2.0f, 0.25f}}, io::PayloadKind::TextBank);
  ASSERT_EQ(bytes.size(), 32u);
  EXPECT_EQ(bytes.substr(0, 4), "UMFC");
  const unsigned char want[] = {1, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, want, 16), 0);
  float v = 0;
  std::memcpy(&v, bytes.data() + 20, 4);
  EXPECT_EQ(v, 1.5f);
}

TEST_F(IoTest, RoundTripWithLabels) {
  const SyntheticDataset ds = generate_benchmark(SynthSpec{});
  io::write_embeddings(ds.images, path("x.umfc"));
  const EmbeddingMatrix back = io::read_embeddings(path("x.umfc"));
  EXPECT_EQ(back.ids, ds.images.ids);
  EXPECT_EQ(back.class_labels, ds.images.class_labels);
  EXPECT_EQ(back.domain_labels, ds.images.domain_labels);
  for (std::size_t i = 0; i < back.data.values().size(); ++i)
    EXPECT_EQ(back.data.values()[i], static_cast<double>(static_cast<float>(ds.images.data.values()[i])));
}

TEST_F(IoTest, EmptyMatrix) {
  io::write_embeddings(EmbeddingMatrix(Matrix(0, 4)), path("e.umfc"));
  EXPECT_EQ(fs::file_size(path("e.umfc")), 20u);
  const EmbeddingMatrix back = io::read_embeddings(path("e.umfc"));
  EXPECT_EQ(back.rows(), 0u);
  EXPECT_EQ(back.dim(), 4u);
}

TEST_F(IoTest, CorruptionsAreTyped) {
  const std::string good = io::encode_embeddings(Matrix{{1, 2}, {3, 4}}, io::PayloadKind::ImageFeatures);
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code_of_parse(bad), ErrorCode::BadMagic);
  bad = good;
  put_u32(bad, 4, 2);
  EXPECT_EQ(code_of_parse(bad), ErrorCode::UnsupportedVersion);
  EXPECT_EQ(code_of_parse(good.substr(0, good.size() - 4)), ErrorCode::TruncatedPayload);
  EXPECT_EQ(code_of_parse(good + "abcd"), ErrorCode::TruncatedPayload);
  EXPECT_EQ(code_of_parse(good.substr(0, 10)), ErrorCode::TruncatedPayload);
  bad = good;
  put_u32(bad, 16, 2);
  EXPECT_EQ(code_of_parse(bad), ErrorCode::WrongPayloadKind);
  bad = good;
  put_u32(bad, 16, 7);
  EXPECT_EQ(code_of_parse(bad), ErrorCode::WrongPayloadKind);
  bad = good;
  const float nan = NAN;
  std::memcpy(bad.data() + 24, &nan, 4);
  EXPECT_EQ(code_of_parse(bad), ErrorCode::NonFinitePayload);
  bad = good;
  put_u32(bad, 8, 0xFFFFFFFFu);
  EXPECT_EQ(code_of_parse(bad), ErrorCode::TruncatedPayload);
}

TEST_F(IoTest, MissingFileIsIo) {
  try {
    io::read_embeddings(path("nope.umfc"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("nope.umfc"), std::string::npos);
  }
}

TEST_F(IoTest, SidecarCountMismatch) {
  EmbeddingMatrix m(Matrix{{1, 0}, {0, 1}});
  m.class_labels = std::vector<int>{0, 1};
  io::write_embeddings(m, path("s.umfc"));
  std::ofstream(io::labels_path(path("s.umfc"))) << "0\t0\t-1\n";
  try {
    io::read_embeddings(path("s.umfc"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelCountMismatch);
  }
}

TEST_F(IoTest, SidecarAbsentLabels) {
  EmbeddingMatrix m(Matrix{{1, 0}, {0, 1}});
  m.ids = {"a", "b"};
  io::write_embeddings(m, path("s.umfc"));
  const EmbeddingMatrix back = io::read_embeddings(path("s.umfc"));
  EXPECT_EQ(back.ids, m.ids);
  EXPECT_FALSE(back.class_labels.has_value());
  EXPECT_FALSE(back.domain_labels.has_value());
}

TEST_F(IoTest, CsvMatchesBinary) {
  std::ofstream(path("x.csv")) << "id,class,domain,v0,v1,v2\n"
                               << "a,1,0,0.1,0.2,0.3\n"
                               << "b,0,1,-1.5,2.25,1e-3\n";
  const EmbeddingMatrix csv = io::read_embeddings_csv(path("x.csv"));
  io::write_embeddings(csv, path("x.umfc"));
  const EmbeddingMatrix bin = io::read_embeddings(path("x.umfc"));
  EXPECT_EQ(csv.data, bin.data);
  EXPECT_EQ(csv.ids, bin.ids);
  EXPECT_EQ(*csv.class_labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(*bin.domain_labels, (std::vector<int>{0, 1}));
}

TEST_F(IoTest, CsvErrors) {
  std::ofstream(path("r.csv")) << "a,0,0,1,2\nb,0,0,1\n";
  EXPECT_THROW(io::read_embeddings_csv(path("r.csv")), Error);
  std::ofstream(path("n.csv")) << "a,0,0,1,nan\n";
  EXPECT_THROW(io::read_embeddings_csv(path("n.csv")), Error);
}

TEST_F(IoTest, TextBankRoundTrip) {
  TextBank b;
  b.names = {"cat", "dog", "bird"};
  b.features = Matrix{{1, 0}, {0, 1}, {0.5, 0.5}};
  io::write_text_bank(b, path("b.umfc"), path("b.txt"));
  const TextBank back = io::read_text_bank(path("b.umfc"), path("b.txt"));
  EXPECT_EQ(back.names, b.names);
  EXPECT_EQ(back.features, b.features);
}

TEST_F(IoTest, TextBankNameErrors) {
  TextBank b;
  b.names = {"cat", "dog", "bird"};
  b.features = Matrix{{1, 0}, {0, 1}, {0.5, 0.5}};
  io::write_text_bank(b, path("b.umfc"), path("b.txt"));
  std::ofstream(path("two.txt")) << "cat\ndog\n";
  try {
    io::read_text_bank(path("b.umfc"), path("two.txt"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NameCountMismatch);
  }
  std::ofstream(path("dup.txt")) << "cat\ndog\ncat\n";
  try {
    io::read_text_bank(path("b.umfc"), path("dup.txt"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateName);
  }
}

TEST_F(IoTest, SnapshotOfFreshState) {
  EngineConfig cfg;
  cfg.mode = UpdateMode::Ema;
  cfg.eta = 0.25;
  const StreamState s = stream_init(cfg);
  io::snapshot_state(s, path("s.bin"));
  const StreamState back = io::restore_state(path("s.bin"));
  EXPECT_TRUE(back == s);
  EXPECT_FALSE(back.bootstrapped());
  EXPECT_EQ(back.config.eta, 0.25);
}

TEST_F(IoTest, SnapshotContinuation) {
  const SyntheticDataset ds = generate_benchmark(SynthSpec{});
  EngineConfig cfg;
  StreamState live = stream_init(cfg);
  auto rows = [&](std::size_t b, std::size_t e) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < e; ++i) idx.push_back(i);
    return ds.images.subset(idx);
  };
  stream_step(live, rows(0, 100), ds.text_bank);
  stream_step(live, rows(100, 200), ds.text_bank);
  io::snapshot_state(live, path("s.bin"));
  StreamState restored = io::restore_state(path("s.bin"));
  EXPECT_TRUE(restored == live);
  for (std::size_t b = 2; b < 6; ++b) {
    const Predictions a = stream_step(live, rows(b * 100, b * 100 + 100), ds.text_bank);
    const Predictions c = stream_step(restored, rows(b * 100, b * 100 + 100), ds.text_bank);
    EXPECT_EQ(a.probs, c.probs);
    EXPECT_EQ(a.labels, c.labels);
  }
}

TEST_F(IoTest, TruncatedSnapshot) {
  const SyntheticDataset ds = generate_benchmark(SynthSpec{});
  StreamState s = stream_init(EngineConfig{});
  stream_step(s, ds.images, ds.text_bank);
  const std::string bytes = io::serialize_state(s);
  try {
    io::deserialize_state(std::string_view(bytes).substr(0, bytes.size() - 9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedPayload);
  }
}

TEST_F(IoTest, SnapshotIsNotAnEmbeddingFile) {
  io::snapshot_state(stream_init(EngineConfig{}), path("s.bin"));
  try {
    io::read_embeddings(path("s.bin"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongPayloadKind);
  }
}

TEST_F(IoTest, AtomicWriteLeavesNoTemp) {
  io::write_file_atomic(path("f.bin"), "hello");
  EXPECT_EQ(io::read_file(path("f.bin")), "hello");
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    (void)e;
    ++n;
  }
  EXPECT_EQ(n, 1u);
  EXPECT_THROW(io::write_file_atomic(path("missing/dir/f.bin"), "x"), Error);
}

}  // namespace
}  // namespace umfc
