#include "acdne/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "acdne/errors.hpp"
#include "acdne/model.hpp"
#include "test_util.hpp"

namespace acdne {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

TEST(FormatDouble, RoundTripsAwkwardValues) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1e3);
  std::vector<double> values{0.1, 1.0 / 3.0, -0.0, 1e-300, 5e-324,
                             std::numeric_limits<double>::max()};
  for (int i = 0; i < 1000; ++i) values.push_back(n(rng));
  for (double v : values) {
    const std::string text = nn::format_double(v);
    double back = 1.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), back);
    EXPECT_EQ(ec, std::errc()) << text;
    EXPECT_EQ(end, text.data() + text.size()) << text;
    EXPECT_EQ(back, v) << text;
    EXPECT_EQ(std::signbit(back), std::signbit(v)) << text;
  }
}

TEST(Checkpoint, RoundTripIsLosslessAndByteStable) {
  TempDir dir;
  nn::Checkpoint a;
  a.set_meta("steps", "3");
  a.set_meta("note", "two words");
  a.vocabulary = {"alpha", "beta gamma"};
  a.tensors.push_back({"w", Eigen::MatrixXd::Random(3, 4) * 1e-3});
  a.tensors.push_back({"empty", Eigen::MatrixXd(0, 2)});
  write_checkpoint(a, dir / "a.ckpt");
  const nn::Checkpoint b = nn::read_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(b.meta, a.meta);
  EXPECT_EQ(b.vocabulary, a.vocabulary);
  ASSERT_EQ(b.tensors.size(), 2u);
  EXPECT_TRUE(b.find("w")->values == a.tensors[0].values);
  EXPECT_EQ(b.find("empty")->values.rows(), 0);
  write_checkpoint(b, dir / "b.ckpt");
  EXPECT_EQ(read_file(dir / "a.ckpt"), read_file(dir / "b.ckpt"));
}

TEST(Checkpoint, SetMetaReplacesInPlace) {
  nn::Checkpoint c;
  c.set_meta("a", "1");
  c.set_meta("b", "2");
  c.set_meta("a", "3");
  ASSERT_EQ(c.meta.size(), 2u);
  EXPECT_EQ(c.meta[0].second, "3");
  EXPECT_THROW(c.set_meta("has space", "x"), ArgumentError);
  EXPECT_THROW(c.set_meta("k", "line\nbreak"), ArgumentError);
}

TEST(Checkpoint, MalformedFilesReportTheLine) {
  TempDir dir;
  write_file(dir / "bad", "acdne-checkpoint 1\ntensor w 1 2\n1.0 oops\nend\n");
  try {
    nn::read_checkpoint(dir / "bad");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  write_file(dir / "magic", "something else\n");
  EXPECT_THROW(nn::read_checkpoint(dir / "magic"), ParseError);
  write_file(dir / "version", "acdne-checkpoint 7\nend\n");
  EXPECT_THROW(nn::read_checkpoint(dir / "version"), ParseError);
  write_file(dir / "truncated", "acdne-checkpoint 1\ntensor w 2 1\n1\n");
  EXPECT_THROW(nn::read_checkpoint(dir / "truncated"), ParseError);
  EXPECT_THROW(nn::read_checkpoint(dir / "missing"), IoError);
}

TEST(ModelCheckpoint, ParamsAndConfigSurviveRoundTrip) {
  TempDir dir;
  TrainConfig cfg;
  cfg.extractor_dims = {5, 4};
  cfg.embedding_dim = 3;
  cfg.discriminator_dims = {2};
  cfg.variant = Variant::kNoFe1;
  cfg.pairwise_weight = 0.123;
  cfg.seed = 77;
  std::mt19937_64 rng(3);
  const ModelParams params = init_params(6, 4, cfg, rng);
  write_checkpoint(to_checkpoint(params, cfg, {"a", "b", "c", "d", "e", "f"}), dir / "m.ckpt");
  const LoadedModel loaded = from_checkpoint(nn::read_checkpoint(dir / "m.ckpt"));
  EXPECT_EQ(loaded.config.variant, Variant::kNoFe1);
  EXPECT_EQ(loaded.config.pairwise_weight, 0.123);
  EXPECT_EQ(loaded.config.seed, 77u);
  EXPECT_EQ(loaded.config.extractor_dims, cfg.extractor_dims);
  EXPECT_EQ(loaded.vocabulary.size(), 6u);
  const auto a = params.layers();
  const auto b = loaded.params.layers();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i]->weight == b[i]->weight);
    EXPECT_TRUE(a[i]->bias == b[i]->bias);
    EXPECT_EQ(a[i]->activation, b[i]->activation);
  }
}

TEST(ModelCheckpoint, ShapeMismatchIsRejected) {
  TrainConfig cfg;
  cfg.extractor_dims = {3};
  cfg.embedding_dim = 2;
  cfg.discriminator_dims = {};
  std::mt19937_64 rng(1);
  nn::Checkpoint ckpt = to_checkpoint(init_params(4, 2, cfg, rng), cfg, {});
  ckpt.tensors.front().values = Eigen::MatrixXd::Zero(9, 9);
  EXPECT_THROW(from_checkpoint(ckpt), ValidationError);
}

}  // namespace
}  // namespace acdne
