#include "ma4div/checkpoint.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace {

using namespace ma4div;
namespace fs = std::filesystem;

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ma4div_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_F(CheckpointTest, RoundTripIsExact) {
  std::mt19937_64 rng(2);
  diff::Parameter a{"a.weight", oracle::random_tensor(3, 4, rng)};
  diff::Parameter b{"a.bias", oracle::random_tensor(1, 4, rng)};
  std::array<diff::Parameter*, 2> params{&a, &b};
  checkpoint::save(dir_ / "x.bin", checkpoint::snapshot(params));

  diff::Parameter a2{"a.weight", Tensor::Zero(3, 4)};
  diff::Parameter b2{"a.bias", Tensor::Zero(1, 4)};
  std::array<diff::Parameter*, 2> restored{&b2, &a2};
  checkpoint::restore(checkpoint::load(dir_ / "x.bin"), restored);
  EXPECT_EQ(a2.value, a.value);
  EXPECT_EQ(b2.value, b.value);

  checkpoint::save(dir_ / "y.bin", checkpoint::snapshot(params));
  EXPECT_EQ(read_bytes(dir_ / "x.bin"), read_bytes(dir_ / "y.bin"));
}

TEST_F(CheckpointTest, RestoreRejectsMissingExtraAndMisshapen) {
  diff::Parameter a{"a", Tensor::Ones(2, 2)};
  std::array<diff::Parameter*, 1> one{&a};
  const auto tensors = checkpoint::snapshot(one);

  diff::Parameter other{"b", Tensor::Ones(2, 2)};
  std::array<diff::Parameter*, 1> wrong_name{&other};
  EXPECT_THROW(checkpoint::restore(tensors, wrong_name), std::runtime_error);

  diff::Parameter small{"a", Tensor::Ones(1, 2)};
  std::array<diff::Parameter*, 1> wrong_shape{&small};
  EXPECT_THROW(checkpoint::restore(tensors, wrong_shape), ShapeError);

  diff::Parameter extra{"c", Tensor::Ones(1, 1)};
  std::array<diff::Parameter*, 2> two{&a, &extra};
  EXPECT_THROW(checkpoint::restore(tensors, two), std::runtime_error);
}

TEST_F(CheckpointTest, LoadRejectsCorruptFiles) {
  diff::Parameter a{"a", Tensor::Ones(2, 2)};
  std::array<diff::Parameter*, 1> one{&a};
  checkpoint::save(dir_ / "good.bin", checkpoint::snapshot(one));
  const std::string bytes = read_bytes(dir_ / "good.bin");

  std::ofstream(dir_ / "truncated.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(checkpoint::load(dir_ / "truncated.bin"), std::runtime_error);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::ofstream(dir_ / "magic.bin", std::ios::binary) << bad_magic;
  EXPECT_THROW(checkpoint::load(dir_ / "magic.bin"), std::runtime_error);

  std::ofstream(dir_ / "trailing.bin", std::ios::binary) << bytes << "z";
  EXPECT_THROW(checkpoint::load(dir_ / "trailing.bin"), std::runtime_error);

  EXPECT_THROW(checkpoint::load(dir_ / "absent.bin"), std::runtime_error);
}

}  // namespace
