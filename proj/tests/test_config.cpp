#include "permnet/config.hpp"

#include <gtest/gtest.h>

using namespace permnet;

TEST(Config, ParsesValuesListsAndComments) {
  const auto cfg = ConfigMap::parse(
      "# header\n"
      "\n"
      "a = 1.5   # trailing\n"
      "b=3\n"
      "flag = true\n"
      "list = 1, 2 ,3\n"
      "name = hello world\n");
  EXPECT_EQ(cfg.get_double("a", 0), 1.5);
  EXPECT_EQ(cfg.get_int("b", 0), 3);
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_EQ(cfg.get_ints("list", {}), (std::vector<long long>{1, 2, 3}));
  EXPECT_EQ(cfg.get_string("name", ""), "hello world");
  EXPECT_EQ(cfg.get_double("missing", 7.0), 7.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    ConfigMap::parse("a = 1\n\nthis line is broken\n", "x.conf");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.conf:3"), std::string::npos) << e.what();
  }
  const auto cfg = ConfigMap::parse("a = 1\nb = nope\n", "y.conf");
  try {
    (void)cfg.get_int("b", 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("y.conf:2"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsDuplicatesAndUnknownKeys) {
  EXPECT_THROW(ConfigMap::parse("a = 1\na = 2\n"), ConfigError);
  const auto cfg = ConfigMap::parse("a = 1\nzzz = 2\n", "z.conf");
  try {
    cfg.reject_unknown({"a"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("z.conf:2"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(cfg.reject_unknown({"a", "zzz"}));
}

TEST(Config, IntegersRejectFractions) {
  const auto cfg = ConfigMap::parse("n = 2.5\nb = maybe\n");
  EXPECT_THROW((void)cfg.get_int("n", 0), ConfigError);
  EXPECT_THROW((void)cfg.get_bool("b", false), ConfigError);
}

TEST(Config, CanonicalIsOrderIndependent) {
  const auto a = ConfigMap::parse("x = 1\ny = 2\n");
  const auto b = ConfigMap::parse("# c\ny=2\n   x =1\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(fnv1a(a.canonical()), fnv1a(b.canonical()));
}

TEST(Fnv1a, ReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}
