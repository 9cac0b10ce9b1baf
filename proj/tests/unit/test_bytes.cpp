#include <doctest.h>

#include <random>

#include "passivessh/bytes.hpp"
#include "passivessh/errors.hpp"

using namespace pssh;

TEST_CASE("base64 encodes known vectors") {
  CHECK(base64_encode(to_bytes("hello world")) == "aGVsbG8gd29ybGQ=");
  CHECK(base64_encode(to_bytes("")) == "");
  CHECK(base64_encode(to_bytes("a")) == "YQ==");
  CHECK(base64_encode(to_bytes("ab")) == "YWI=");
  CHECK(base64_encode(to_bytes("abc")) == "YWJj");
}

TEST_CASE("base64 decodes with and without padding") {
  CHECK(to_text(base64_decode("aGVsbG8gd29ybGQ=")) == "hello world");
  CHECK(to_text(base64_decode("aGVsbG8gd29ybGQ")) == "hello world");
  CHECK(to_text(base64_decode("YQ==")) == "a");
  CHECK(to_text(base64_decode("YQ")) == "a");
  CHECK(base64_decode("").empty());
}

TEST_CASE("base64 round trips arbitrary binary") {
  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    Bytes b(static_cast<std::size_t>(rng() % 100));
    for (auto& v : b) v = static_cast<std::uint8_t>(rng());
    CHECK(base64_decode(base64_encode(b)) == b);
  }
}

TEST_CASE("base64 rejects garbage") {
  CHECK_THROWS_AS(base64_decode("not!valid"), Error);
  CHECK_THROWS_AS(base64_decode("A"), Error);        // lone 6 bits
  CHECK_THROWS_AS(base64_decode("AAAA=AAA"), Error); // padding mid-stream
}

TEST_CASE("to_hex") {
  CHECK(to_hex(Bytes{0x00, 0xff, 0x10}) == "00ff10");
  CHECK(to_hex(Bytes{}) == "");
}

TEST_CASE("ByteWriter and ByteReader round trip") {
  ByteWriter w;
  w.u8(30);
  w.u32(0xdeadbeef);
  w.string("payload");
  w.name_list({"a", "bb", "ccc"});
  w.name_list({});
  Bytes data = w.take();

  ByteReader r{std::span<const std::uint8_t>(data)};
  CHECK(r.u8() == 30);
  CHECK(r.u32() == 0xdeadbeef);
  CHECK(r.string_text() == "payload");
  CHECK(r.name_list() == std::vector<std::string>{"a", "bb", "ccc"});
  CHECK(r.name_list().empty());
  CHECK(r.done());
}

TEST_CASE("ByteReader rejects truncated input") {
  Bytes short_u32{0x00, 0x01};
  ByteReader r1{std::span<const std::uint8_t>(short_u32)};
  CHECK_THROWS_AS(r1.u32(), Error);

  // Length prefix promising more bytes than remain.
  Bytes bad_string{0x00, 0x00, 0x00, 0x05, 'h', 'i'};
  ByteReader r2{std::span<const std::uint8_t>(bad_string)};
  CHECK_THROWS_AS(r2.string_bytes(), Error);

  ByteReader r3{std::span<const std::uint8_t>(bad_string)};
  CHECK_THROWS_AS(r3.raw(7), Error);
}

TEST_CASE("join and split") {
  CHECK(join({"a", "b", "c"}, ",") == "a,b,c");
  CHECK(join({}, ",") == "");
  CHECK(split("a,b,c", ',') == std::vector<std::string>{"a", "b", "c"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(split("solo", ',') == std::vector<std::string>{"solo"});
}

TEST_CASE("random_bytes returns requested size") {
  CHECK(random_bytes(0).empty());
  CHECK(random_bytes(16).size() == 16);
  // Not all zero, with overwhelming probability.
  auto b = random_bytes(32);
  bool any = false;
  for (auto v : b) any = any || v != 0;
  CHECK(any);
}

TEST_CASE("is_valid_utf8") {
  CHECK(is_valid_utf8("plain ascii"));
  CHECK(is_valid_utf8("ümlaut \xE2\x82\xAC"));
  CHECK_FALSE(is_valid_utf8("\xff\xfe"));
  CHECK_FALSE(is_valid_utf8("\xC3"));  // dangling lead byte
}
