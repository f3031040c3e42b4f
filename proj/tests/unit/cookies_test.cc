#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "trackguard/cookies.h"

namespace trackguard {
namespace {

TEST(DefaultCookiePath, Directory) {
  EXPECT_EQ(default_cookie_path("/a/b/c"), "/a/b");
  EXPECT_EQ(default_cookie_path("/a"), "/");
  EXPECT_EQ(default_cookie_path("/"), "/");
  EXPECT_EQ(default_cookie_path(""), "/");
}

TEST(ParseSetCookie, Defaults) {
  auto c = parse_set_cookie("uid=42", "http://ads.tracker.example/px/t.gif");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->key, (CookieKey{"uid", "ads.tracker.example", "/px"}));
  EXPECT_EQ(c->value, "42");
  EXPECT_TRUE(c->host_only);
  EXPECT_FALSE(c->expired);
}

TEST(ParseSetCookie, Attributes) {
  auto c = parse_set_cookie(" sid = abc ; Domain=.Tracker.Example; Path=/; HttpOnly; Secure",
                            "http://ads.tracker.example/t.js");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->key, (CookieKey{"sid", "tracker.example", "/"}));
  EXPECT_FALSE(c->host_only);
  auto relative_path = parse_set_cookie("a=1; Path=rel", "http://s.example/x/y");
  EXPECT_EQ(relative_path->key.path, "/x");
}

TEST(ParseSetCookie, Rejections) {
  EXPECT_FALSE(parse_set_cookie("novalue", "http://s.example/"));
  EXPECT_FALSE(parse_set_cookie("=v", "http://s.example/"));
  EXPECT_FALSE(parse_set_cookie("a=1; Domain=other.example", "http://s.example/"));
  EXPECT_FALSE(parse_set_cookie("a=1; Domain=co.uk", "http://shop.co.uk/"));
  EXPECT_FALSE(parse_set_cookie("a=1", "not a url"));
  EXPECT_TRUE(parse_set_cookie("a=1; Domain=shop.co.uk", "http://www.shop.co.uk/"));
}

TEST(ParseSetCookie, MaxAgeExpiry) {
  EXPECT_TRUE(parse_set_cookie("a=1; Max-Age=0", "http://s.example/")->expired);
  EXPECT_TRUE(parse_set_cookie("a=1; max-age=-5", "http://s.example/")->expired);
  EXPECT_FALSE(parse_set_cookie("a=1; Max-Age=3600", "http://s.example/")->expired);
  EXPECT_FALSE(parse_set_cookie("a=1; Max-Age=soon", "http://s.example/")->expired);
}

TEST(CountCookies, StoreSemantics) {
  using Set = std::set<CookieKey>;
  EXPECT_EQ(count_cookies(std::vector<Set>{}), 0u);
  EXPECT_EQ(count_cookies(std::vector<Set>{{}, {}}), 0u);
  Set one{{"fp", "news.example", "/"}};
  EXPECT_EQ(count_cookies(std::vector<Set>{one, one, one}), 1u);
  Set other_path{{"fp", "news.example", "/a"}};
  EXPECT_EQ(count_cookies(std::vector<Set>{one, other_path}), 2u);
}

TEST(CountCookies, OrderIndependent) {
  std::mt19937_64 rng(3);
  std::vector<std::set<CookieKey>> sets(12);
  for (auto& s : sets) {
    for (int i = rng() % 6; i > 0; --i) {
      s.insert({"c" + std::to_string(rng() % 5), "d" + std::to_string(rng() % 3) + ".example",
                rng() % 2 ? "/" : "/x"});
    }
  }
  std::size_t expected = count_cookies(sets);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(sets.begin(), sets.end(), rng);
    EXPECT_EQ(count_cookies(sets), expected);
  }
}

}  // namespace
}  // namespace trackguard
