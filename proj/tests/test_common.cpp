#include "support.hpp"

#include "streamlens/common.hpp"
#include "streamlens/io.hpp"
#include "streamlens/text.hpp"

#include <doctest.h>

using namespace streamlens;
using namespace std::chrono;

TEST_CASE("timestamps parse both platform and ISO forms") {
    const auto a = parse_timestamp("Sun Mar 15 23:59:00 +0000 2020");
    const auto b = parse_timestamp("2020-03-15T23:59:00Z");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*a == *b);
    CHECK(format_timestamp(*a) == "2020-03-15T23:59:00Z");
    CHECK(format_platform_timestamp(*a) == "Sun Mar 15 23:59:00 +0000 2020");
    CHECK(parse_timestamp("2020-03-15T23:59:00.250Z") == b);
    CHECK(parse_timestamp("2020-03-16T01:59:00+02:00") == b);
    CHECK_FALSE(parse_timestamp("yesterday"));
    CHECK_FALSE(parse_timestamp("2020-13-01T00:00:00Z"));
}

TEST_CASE("UTC day bucketing at midnight") {
    const auto late = *parse_timestamp("2020-03-15T23:59:00Z");
    const auto early = *parse_timestamp("2020-03-16T00:01:00Z");
    CHECK(format_day(day_of(late)) == "2020-03-15");
    CHECK(format_day(day_of(early)) == "2020-03-16");
    CHECK(parse_day("2020-02-01") == day_of(*parse_timestamp("2020-02-01T12:00:00Z")));
    CHECK_FALSE(parse_day("2020-2-1x"));
}

TEST_CASE("number rendering") {
    CHECK(with_thousands(206330119) == "206,330,119");
    CHECK(with_thousands(0) == "0");
    CHECK(with_thousands(999) == "999");
    CHECK(with_thousands(1000) == "1,000");
    CHECK(format_real(0.5) == "0.5");
    CHECK(format_real(2.31e-7) == "2.31e-07");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_real(x)) == x);
}

TEST_CASE("interaction kinds round-trip") {
    for (auto k : kAllInteractionKinds) CHECK(parse_interaction_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_interaction_kind("follow"), ConfigError);
}

TEST_CASE("csv quoting round-trips") {
    const io::CsvRow row{"plain", "with,comma", "with \"quote\"", "", "line\nbreak"};
    const auto line = io::join_csv(row);
    CHECK(io::split_csv_line(io::join_csv({"a", "b,c"})) == io::CsvRow{"a", "b,c"});
    const auto t = io::parse_csv("x,y\n" + io::join_csv({"1", "with,comma"}) + "\n\n2,\"q\"\"\"\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "with,comma");
    CHECK(t.rows[1][1] == "q\"");
    CHECK(t.column("y") == 1);
    CHECK_THROWS_AS(t.column("z"), InputError);
    CHECK_THROWS_AS(io::parse_csv("x,y\n1,2,3\n"), InputError);
    CHECK(line.find("\"with,comma\"") != std::string::npos);
}

TEST_CASE("key-value files ignore comments") {
    const auto kv = io::parse_key_values("# header\na=1\n\nb = two words\n");
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two words");
    CHECK(io::parse_key_values(io::format_key_values(kv)) == kv);
}

TEST_CASE("gzip and plain files read identically") {
    testsupport::TempDir dir;
    const std::string body = "first\nsecond\r\nthird";
    io::write_gzip_file(dir / "a.jsonl.gz", body);
    io::write_file_atomic(dir / "b.jsonl", body);
    const auto a = io::read_lines(dir / "a.jsonl.gz");
    CHECK(a == std::vector<std::string>{"first", "second", "third"});
    CHECK(io::read_lines(dir / "b.jsonl") == a);
    CHECK_THROWS(io::read_lines(dir / "missing.gz"));
}

TEST_CASE("input expansion sorts glob and directory matches") {
    testsupport::TempDir dir;
    for (const char* n : {"b.gz", "a.gz", "c.txt"}) io::write_file_atomic(dir / n, "x\n");
    const auto globbed = io::expand_inputs((dir / "*.gz").string());
    REQUIRE(globbed.size() == 2);
    CHECK(globbed[0].filename() == "a.gz");
    CHECK(io::expand_inputs(dir.path().string()).size() == 3);
    CHECK(io::expand_inputs((dir / "none-*").string()).empty());
}

TEST_CASE("case folding and word segmentation") {
    CHECK(text::fold_case("COVID19 Straße") == "covid19 strasse");
    CHECK(text::ascii_lower("AbC") == "abc");
    CHECK(text::word_tokens("you BADWORD, really!") == std::vector<std::string>{"you", "badword", "really"});
    CHECK(text::word_tokens("Scunthorpe council") == std::vector<std::string>{"scunthorpe", "council"});
    CHECK(text::word_tokens("") .empty());
    const auto cjk = text::word_tokens("Привет мир");
    CHECK(cjk == std::vector<std::string>{"привет", "мир"});
}

TEST_CASE("url stripping and domain normalisation") {
    CHECK(text::strip_urls("see https://t.co/abc now") .find("t.co") == std::string::npos);
    CHECK(text::normalize_domain("https://www.BBC.co.uk/news?x=1") == "bbc.co.uk");
    CHECK(text::normalize_domain("http://bit.ly/xyz") == "bit.ly");
    CHECK(text::normalize_domain("bbc.co.uk") == "bbc.co.uk");
    CHECK(text::normalize_domain("HTTPS://user@Example.com:8080/p") == "example.com");
    CHECK(text::normalize_domain("") == "");
    CHECK(text::trim("  a b \t") == "a b");
}
