#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "ppac/checkpoint.hpp"
#include "ppac/error.hpp"

namespace ppac {
namespace {

bool same_params(const Network<float>& a, const Network<float>& b) {
  return a.arch().config() == b.arch().config() &&
         std::equal(a.params().begin(), a.params().end(), b.params().begin(), b.params().end());
}

TEST(Checkpoint, RoundTripEveryLayout) {
  for (auto layout : {HeadLayout::Partial, HeadLayout::ActorCritic, HeadLayout::QLearning}) {
    const Network<float> net(NetworkConfig{8, {4, 8}, 3, 16, layout}, 3);
    std::stringstream io;
    write_checkpoint(io, net, 12, 99);
    const Checkpoint back = read_checkpoint(io);
    EXPECT_TRUE(same_params(back.network, net)) << layout_name(layout);
    EXPECT_EQ(back.epoch, 12);
    EXPECT_EQ(back.seed, 99u);
  }
}

TEST(Checkpoint, ManifestDescribesTensors) {
  const Network<float> net(NetworkConfig{8, {4}, 3, 4, HeadLayout::QLearning}, 1);
  std::ostringstream out;
  write_checkpoint(out, net, 0, 1);
  const std::string line = out.str().substr(0, out.str().find('\n'));
  EXPECT_NE(line.find(R"("format":"ppac-checkpoint")"), std::string::npos);
  EXPECT_NE(line.find(R"({"name":"trunk.conv0.weight","shape":[4,3,3,3]})"), std::string::npos);
  EXPECT_NE(line.find(R"({"name":"q.w2","shape":[6,4]})"), std::string::npos);
  EXPECT_EQ(out.str().size() - line.size() - 1, net.params().size() * 4);
}

TEST(Checkpoint, TruncatedOrPaddedPayload) {
  const Network<float> net(NetworkConfig{8, {4}, 3, 4, HeadLayout::Partial}, 1);
  std::ostringstream out;
  write_checkpoint(out, net, 0, 1);
  const std::string bytes = out.str();
  std::istringstream short_in(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_checkpoint(short_in), IoError);
  std::istringstream long_in(bytes + "x");
  EXPECT_THROW(read_checkpoint(long_in), IoError);
  std::istringstream junk("{\"format\":\"other\"}\n");
  EXPECT_THROW(read_checkpoint(junk), IoError);
}

} // namespace
} // namespace ppac
