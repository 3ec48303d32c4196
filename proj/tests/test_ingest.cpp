#include "support.hpp"

#include "streamlens/ingest.hpp"
#include "streamlens/io.hpp"
#include "streamlens/synth.hpp"

#include <doctest.h>

#include <set>

using namespace streamlens;
using namespace streamlens::ingest;

namespace {

TweetRecord record_with_text(std::string text, std::vector<std::string> tags = {}) {
    TweetRecord r;
    r.tweet_id = "1";
    r.author_id = "a";
    r.text = std::move(text);
    r.hashtags = std::move(tags);
    return r;
}

// Generator-side class under Retweet > Quote > Reply > Original.
TweetClass truth_class(const synth::SynthTweet& t) {
    if (t.retweet_of) return TweetClass::Retweet;
    if (t.quote_of) return TweetClass::Quote;
    if (t.reply_to) return TweetClass::Reply;
    return TweetClass::Original;
}

}  // namespace

TEST_CASE("keyword filter is case-folded substring over text and hashtags") {
    const std::vector<std::string> k{"covid19"};
    CHECK(keyword_filter(record_with_text("Latest COVID19 news"), k));
    CHECK_FALSE(keyword_filter(record_with_text("influenza update"), k));
    CHECK(keyword_filter(record_with_text("nothing", {"covid19nigeria"}), k));
    CHECK(keyword_filter(record_with_text("Stop the Wuhan Virus now"), std::vector<std::string>{"wuhan virus"}));
    CHECK_THROWS_AS(keyword_filter(record_with_text("x"), std::vector<std::string>{}), InputError);
}

TEST_CASE("keyword filter is monotone in the keyword set") {
    Rng rng(7);
    const std::vector<std::string> words{"alpha", "beta", "covid", "delta", "virus", "corona"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        for (int w = 0; w < 3; ++w) text += words[rng.below(words.size())] + " ";
        const auto r = record_with_text(text);
        std::vector<std::string> k1{words[rng.below(words.size())]};
        auto k12 = k1;
        k12.push_back(words[rng.below(words.size())]);
        if (keyword_filter(r, k1)) CHECK(keyword_filter(r, k12));
    }
}

TEST_CASE("parse_tweet_record classifies skips without throwing") {
    CHECK(parse_tweet_record("").skip == SkipReason::KeepAlive);
    CHECK(parse_tweet_record("   ").skip == SkipReason::KeepAlive);
    CHECK(parse_tweet_record("{\"id_str\": \"1\"").skip == SkipReason::MalformedJson);
    CHECK(parse_tweet_record(R"({"delete":{"status":{"id":1}}})").skip == SkipReason::NonTweet);
    CHECK(parse_tweet_record(R"({"limit":{"track":12}})").skip == SkipReason::NonTweet);
    CHECK(parse_tweet_record(R"({"id_str":"1","text":"x"})").skip == SkipReason::MissingField);
    CHECK(parse_tweet_record(R"({"id_str":"1","user":{"id_str":"2"},"created_at":"soon"})").skip ==
          SkipReason::BadTimestamp);
}

TEST_CASE("parse_tweet_record extracts entities and references") {
    const auto line = R"({"id_str":"10","created_at":"Sun Mar 15 23:59:00 +0000 2020","lang":"en",
        "text":"short","extended_tweet":{"full_text":"Full #COVID19 text","entities":{
        "hashtags":[{"text":"COVID19"},{"text":"#Stay"}],"user_mentions":[{"id_str":"7","screen_name":"b"}],
        "urls":[{"url":"https://t.co/1","expanded_url":"https://www.bbc.co.uk/x"}]}},
        "extended_entities":{"media":[{},{}]},
        "quoted_status_id_str":"99","quoted_status":{"id_str":"99","user":{"id_str":"8","screen_name":"q"}},
        "user":{"id_str":"5","screen_name":"A","verified":true,"created_at":"Wed Jan 01 00:00:00 +0000 2020",
        "description":"hi","followers_count":3}})";
    const auto p = parse_tweet_record(line);
    REQUIRE(p.ok());
    const auto& r = *p.record;
    CHECK(r.text == "Full #COVID19 text");
    CHECK(r.hashtags == std::vector<std::string>{"covid19", "stay"});
    REQUIRE(r.mentions.size() == 1);
    CHECK(r.mentions[0].account_id == "7");
    CHECK(r.urls == std::vector<std::string>{"https://www.bbc.co.uk/x"});
    CHECK(r.media_count == 2);
    CHECK(r.verified);
    CHECK(r.quoted_id == "99");
    REQUIRE(r.quoted_author);
    CHECK(r.quoted_author->account_id == "8");
    CHECK(classify_tweet(r) == TweetClass::Quote);
    CHECK(p.author->followers == 3);
    CHECK(format_timestamp(p.author->created_at) == "2020-01-01T00:00:00Z");
}

TEST_CASE("numeric ids and timestamp_ms are accepted") {
    const auto p = parse_tweet_record(R"({"id":12,"timestamp_ms":"1584316740000","user":{"id":3},"text":"x"})");
    REQUIRE(p.ok());
    CHECK(p.record->tweet_id == "12");
    CHECK(p.record->author_id == "3");
    CHECK(format_timestamp(p.record->created_at) == "2020-03-15T23:59:00Z");
}

TEST_CASE("class precedence: retweet over quote over reply") {
    TweetRecord r;
    CHECK(classify_tweet(r) == TweetClass::Original);
    r.reply_to_id = "1";
    CHECK(classify_tweet(r) == TweetClass::Reply);
    r.quoted_id = "2";
    CHECK(classify_tweet(r) == TweetClass::Quote);
    r.retweeted_id = "3";
    CHECK(classify_tweet(r) == TweetClass::Retweet);
}

TEST_CASE("stream_summary edge cases") {
    const auto empty = stream_summary({});
    CHECK(empty.total_tweets == 0);
    CHECK(empty.daily_counts.empty());
    TweetRecord one;
    one.tweet_id = "1";
    one.author_id = "a";
    const auto s = stream_summary(std::span(&one, 1));
    CHECK(s.total_tweets == 1);
    CHECK(s.original_tweets == 1);
    CHECK(s.retweet_tweets + s.reply_tweets + s.quote_tweets == 0);
}

TEST_CASE("partition_by_day fills gaps with zero") {
    std::vector<TweetRecord> rs(3);
    rs[0].created_at = *parse_timestamp("2020-03-15T23:59:00Z");
    rs[1].created_at = *parse_timestamp("2020-03-16T00:01:00Z");
    rs[2].created_at = *parse_timestamp("2020-03-18T10:00:00Z");
    const auto d = partition_by_day(rs);
    REQUIRE(d.size() == 4);
    CHECK(d.at(*parse_day("2020-03-15")) == 1);
    CHECK(d.at(*parse_day("2020-03-16")) == 1);
    CHECK(d.at(*parse_day("2020-03-17")) == 0);
    CHECK(partition_by_day({}).empty());
}

TEST_CASE("daily cap is reported as metadata") {
    std::vector<TweetRecord> rs(5);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        rs[i].tweet_id = std::to_string(i);
        rs[i].created_at = *parse_timestamp(i < 3 ? "2020-03-15T01:00:00Z" : "2020-03-16T01:00:00Z");
    }
    const auto s = stream_summary(rs, 3);
    REQUIRE(s.days_at_cap.size() == 1);
    CHECK(format_day(s.days_at_cap[0]) == "2020-03-15");
    CHECK(parse_stats_report(format_stats_report(s)).days_at_cap == s.days_at_cap);
}

TEST_CASE("synthetic corpus: counts match generator tallies exactly") {
    synth::SynthConfig cfg;
    cfg.tweets = 10000;
    cfg.users = 800;
    cfg.seed = 11;
    cfg.corrupt_rate = 0.01;
    cfg.keyword_rate = 0.4;
    cfg.notice_lines = 37;
    cfg.keepalive_lines = 23;
    const auto g = synth::generate(cfg);

    LoadOptions opts;
    opts.keywords = {"covid19"};
    opts.threads = 3;
    opts.shard_lines = 1000;
    const auto c = parse_lines(g.lines, opts);

    std::map<TweetClass, std::uint64_t> classes;
    std::uint64_t kept = 0, hashtags = 0, urls = 0, media = 0, keyword_total = 0;
    std::set<std::size_t> authors;
    std::map<Day, std::uint64_t> daily;
    for (const auto& t : g.tweets) {
        if (t.keyword) ++keyword_total;
        if (t.corrupted || !t.keyword) continue;
        ++kept;
        ++classes[truth_class(t)];
        hashtags += t.hashtags.size();
        urls += t.urls.size();
        media += t.media;
        authors.insert(t.author);
        ++daily[day_of(t.created_at)];
    }
    CHECK(keyword_total == 4000);  // exact plant
    CHECK(c.counters.lines == g.lines.size());
    CHECK(c.counters.parsed + c.counters.skipped_total() == c.counters.lines);
    CHECK(c.counters.skipped.at(SkipReason::MalformedJson) == 100);
    CHECK(c.counters.skipped.at(SkipReason::NonTweet) == 37);
    CHECK(c.counters.skipped.at(SkipReason::KeepAlive) == 23);
    CHECK(c.records.size() == kept);

    const auto s = stream_summary(c.records);
    CHECK(s.total_tweets == kept);
    CHECK(s.original_tweets == classes[TweetClass::Original]);
    CHECK(s.retweet_tweets == classes[TweetClass::Retweet]);
    CHECK(s.reply_tweets == classes[TweetClass::Reply]);
    CHECK(s.quote_tweets == classes[TweetClass::Quote]);
    CHECK(s.original_tweets + s.retweet_tweets + s.reply_tweets + s.quote_tweets == s.total_tweets);
    CHECK(s.hashtag_occurrences == hashtags);
    CHECK(s.url_occurrences == urls);
    CHECK(s.images == media);
    CHECK(s.unique_users == authors.size());
    for (const auto& [day, n] : daily) CHECK(s.daily_counts.at(day) == n);
}

TEST_CASE("synthetic keyword rate 0.4 is retained exactly") {
    synth::SynthConfig cfg;
    cfg.tweets = 5000;
    cfg.users = 300;
    cfg.keyword_rate = 0.4;
    const auto g = synth::generate(cfg);
    LoadOptions opts;
    opts.keywords = {"covid19"};
    const auto c = parse_lines(g.lines, opts);
    CHECK(c.records.size() == 2000);
    CHECK(c.counters.filtered_out == 3000);
}

TEST_CASE("uniform days: 10k records over 10 days gives 1000 per day") {
    synth::SynthConfig cfg;
    cfg.tweets = 10000;
    cfg.users = 500;
    cfg.days = 10;
    const auto g = synth::generate(cfg);
    const auto c = parse_lines(g.lines);
    const auto d = partition_by_day(c.records);
    REQUIRE(d.size() == 10);
    for (const auto& [day, n] : d) CHECK(n == 1000);
}

TEST_CASE("parallelism and shard size do not change the result") {
    synth::SynthConfig cfg;
    cfg.tweets = 3000;
    cfg.users = 200;
    cfg.corrupt_rate = 0.02;
    const auto g = synth::generate(cfg);
    LoadOptions serial;
    serial.threads = 1;
    LoadOptions parallel;
    parallel.threads = 4;
    parallel.shard_lines = 257;
    const auto a = parse_lines(g.lines, serial);
    const auto b = parse_lines(g.lines, parallel);
    CHECK(a.counters == b.counters);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].tweet_id == b.records[i].tweet_id);
    CHECK(stream_summary(a.records) == stream_summary(b.records));
}

TEST_CASE("parsing the same files twice is idempotent and deduplicates") {
    testsupport::TempDir dir;
    synth::SynthConfig cfg;
    cfg.tweets = 2000;
    cfg.users = 150;
    const auto g = synth::generate(cfg);
    std::string body;
    for (const auto& l : g.lines) body += l + "\n";
    io::write_gzip_file(dir / "a.jsonl.gz", body);
    io::write_file_atomic(dir / "b.jsonl", body);
    const std::vector<std::filesystem::path> one{dir / "a.jsonl.gz"};
    const auto first = stream_summary(load_corpus(one).records);
    CHECK(stream_summary(load_corpus(one).records) == first);
    const std::vector<std::filesystem::path> both{dir / "a.jsonl.gz", dir / "b.jsonl"};
    const auto merged = load_corpus(both);
    CHECK(merged.counters.duplicates == 2000);
    CHECK(stream_summary(merged.records) == first);
}

TEST_CASE("keywords file ignores comments and folds case") {
    testsupport::TempDir dir;
    io::write_file_atomic(dir / "k.txt", "# terms\nCOVID19\n\n  Wuhan Virus \n");
    CHECK(load_keywords(dir / "k.txt") == std::vector<std::string>{"covid19", "wuhan virus"});
    io::write_file_atomic(dir / "empty.txt", "# nothing\n");
    CHECK_THROWS_AS(load_keywords(dir / "empty.txt"), InputError);
}

TEST_CASE("stats report and table carry the platform field names") {
    synth::SynthConfig cfg;
    cfg.tweets = 500;
    cfg.users = 50;
    const auto c = parse_lines(synth::generate(cfg).lines);
    const auto s = stream_summary(c.records);
    auto parsed = parse_stats_report(format_stats_report(s));
    parsed.daily_counts = s.daily_counts;
    CHECK(parsed == s);
    const auto table = format_stats_table(s);
    for (const char* label : {"Total Tweets", "Total Unique Users", "Original Tweets", "Retweet Tweets",
                              "Reply Tweets", "Quote Tweets", "Hashtags", "Images", "URLs"}) {
        CHECK(table.find(label) != std::string::npos);
    }
    CHECK(format_daily_csv(s.daily_counts).rfind("date,count\n", 0) == 0);
}
