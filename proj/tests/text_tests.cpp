#include <string>
#include <vector>

#include "calibench/text.hpp"
#include "doctest.h"

using namespace calibench;

TEST_CASE("trim removes surrounding whitespace only") {
  CHECK(text::trim("  hello  ") == "hello");
  CHECK(text::trim("\t a b \n") == "a b");
  CHECK(text::trim("") == "");
  CHECK(text::trim("   ") == "");
  CHECK(text::trim("no-op") == "no-op");
}

TEST_CASE("collapse_spaces squeezes internal runs and trims") {
  CHECK(text::collapse_spaces("a   b\t\tc") == "a b c");
  CHECK(text::collapse_spaces("  x  ") == "x");
  CHECK(text::collapse_spaces("") == "");
}

TEST_CASE("lowercase is ASCII-only and total") {
  CHECK(text::lowercase("MiXeD 42!") == "mixed 42!");
}

TEST_CASE("split keeps empty fields and does not trim") {
  auto parts = text::split("a| b ||c", '|');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[1] == " b ");
  CHECK(parts[2] == "");
  CHECK(parts[3] == "c");
  CHECK(text::split("", ',').size() == 1);
}

TEST_CASE("word_tokens lowercases and drops punctuation") {
  auto tokens = text::word_tokens("Hello, World! x2");
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[0] == "hello");
  CHECK(tokens[1] == "world");
  CHECK(tokens[2] == "x2");
  CHECK(text::word_tokens("...").empty());
}

TEST_CASE("token_jaccard endpoints and a hand value") {
  CHECK(text::token_jaccard("", "") == 1.0);
  CHECK(text::token_jaccard("apple", "") == 0.0);
  CHECK(text::token_jaccard("", "apple") == 0.0);
  // {red, apple} vs {green, apple}: intersection 1, union 3.
  CHECK(text::token_jaccard("red apple", "green apple") == doctest::Approx(1.0 / 3.0));
  // Symmetric and insensitive to duplicates/case.
  CHECK(text::token_jaccard("Red red APPLE", "apple red") == 1.0);
  CHECK(text::token_jaccard("a b c", "c d") == text::token_jaccard("c d", "a b c"));
}

TEST_CASE("shared_token_count and token_count") {
  CHECK(text::shared_token_count("the quick fox", "a quick brown fox") == 2);
  CHECK(text::token_count("one two  three") == 3);
  CHECK(text::token_count("") == 0);
}

TEST_CASE("replace_all substitutes every occurrence") {
  CHECK(text::replace_all("[x] and [x]", "[x]", "y") == "y and y");
  CHECK(text::replace_all("abc", "q", "z") == "abc");
  // Replacement text containing the pattern must not recurse.
  CHECK(text::replace_all("aa", "a", "ab") == "abab");
}

TEST_CASE("starts_with_ci ignores case, respects length") {
  CHECK(text::starts_with_ci("Mock-GPT", "mock"));
  CHECK(text::starts_with_ci("mock", "MOCK"));
  CHECK_FALSE(text::starts_with_ci("moc", "mock"));
  CHECK_FALSE(text::starts_with_ci("gpt-4", "mock"));
  CHECK(text::starts_with_ci("anything", ""));
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(text::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(text::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("seeded fnv1a64 is a distinct digest family") {
  CHECK(text::fnv1a64("payload") != text::fnv1a64("payload", 0x9e3779b97f4a7c15ull));
  // Seeding with the standard offset basis reproduces the unseeded digest.
  CHECK(text::fnv1a64("payload", 0xcbf29ce484222325ull) == text::fnv1a64("payload"));
}

TEST_CASE("hex64 is fixed-width lowercase hex") {
  CHECK(text::hex64(0) == "0000000000000000");
  CHECK(text::hex64(0xcbf29ce484222325ull) == "cbf29ce484222325");
  CHECK(text::hex64(0xffffffffffffffffull) == "ffffffffffffffff");
}
