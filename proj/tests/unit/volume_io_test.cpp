#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "ppac/error.hpp"
#include "ppac/synthetic.hpp"
#include "ppac/volume_io.hpp"

namespace ppac {
namespace {

std::string payload(std::size_t floats) {
  std::string out(floats * 4, '\0');
  for (std::size_t i = 0; i < floats; ++i) {
    const float f = static_cast<float>(i);
    std::memcpy(out.data() + 4 * i, &f, 4);
  }
  return out;
}

std::string error_of(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_volume(in);
  } catch (const IoError& e) {
    return e.what();
  }
  return "";
}

TEST(VolumeIo, RoundTripIsIdentity) {
  SyntheticSpec spec;
  spec.seed = 1;
  const Volume v = generate_synthetic(spec);
  const auto path = std::filesystem::temp_directory_path() / "ppac_roundtrip.vol";
  save_volume(v, path);
  EXPECT_TRUE(load_volume(path) == v);
  std::filesystem::remove(path);
}

TEST(VolumeIo, HeaderIsExactJsonLine) {
  Volume w({3, 3, 3}, {0.5, 1, 2}, std::vector<float>(27, 1.0f), {{"apex", {1.0, 1.5, 1.0}}});
  std::ostringstream out;
  write_volume(out, w);
  const std::string s = out.str();
  const auto nl = s.find('\n');
  EXPECT_EQ(s.substr(0, nl),
            R"({"dims":[3,3,3],"spacing":[0.5,1.0,2.0],"dtype":"f32le","landmarks":{"apex":[1.0,1.5,1.0]}})");
  EXPECT_EQ(s.size() - nl - 1, 27u * 4u);
}

TEST(VolumeIo, PayloadSizeMismatch) {
  const std::string header = R"({"dims":[4,4,4],"spacing":[1,1,1],"dtype":"f32le","landmarks":{}})"
                             "\n";
  EXPECT_NE(error_of(header + payload(63)).find("payload"), std::string::npos);
  EXPECT_NE(error_of(header + payload(65)).find("payload"), std::string::npos);
  EXPECT_EQ(error_of(header + payload(64)), "");
}

TEST(VolumeIo, MissingDimsKey) {
  const std::string header = R"({"spacing":[1,1,1],"dtype":"f32le","landmarks":{}})"
                             "\n";
  const std::string msg = error_of(header + payload(64));
  EXPECT_NE(msg.find("header"), std::string::npos);
  EXPECT_NE(msg.find("dims"), std::string::npos);
}

TEST(VolumeIo, NonFinitePayload) {
  const std::string header = R"({"dims":[1,1,2],"spacing":[1,1,1],"dtype":"f32le","landmarks":{}})"
                             "\n";
  std::string body = payload(2);
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(body.data() + 4, &inf, 4);
  EXPECT_NE(error_of(header + body).find("non-finite"), std::string::npos);
}

TEST(VolumeIo, MalformedHeader) {
  EXPECT_NE(error_of("{not json\n"), "");
  EXPECT_NE(error_of(R"({"dims":[1,1,1],"spacing":[1,1,1],"dtype":"f64le","landmarks":{}})"
                     "\n" + payload(1)).find("dtype"),
            std::string::npos);
  EXPECT_THROW(load_volume("/nonexistent/ppac.vol"), IoError);
}

} // namespace
} // namespace ppac
