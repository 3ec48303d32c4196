#include "streamlens/ingest.hpp"

#include "streamlens/io.hpp"
#include "streamlens/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <set>
#include <thread>
#include <unordered_set>

namespace streamlens::ingest {

using nlohmann::json;

std::string_view to_string(TweetClass c) {
    switch (c) {
        case TweetClass::Original: return "original";
        case TweetClass::Retweet: return "retweet";
        case TweetClass::Reply: return "reply";
        case TweetClass::Quote: return "quote";
    }
    return "unknown";
}

std::string_view to_string(SkipReason r) {
    switch (r) {
        case SkipReason::None: return "none";
        case SkipReason::KeepAlive: return "keep_alive";
        case SkipReason::NonTweet: return "non_tweet";
        case SkipReason::MalformedJson: return "malformed_json";
        case SkipReason::MissingField: return "missing_field";
        case SkipReason::BadTimestamp: return "bad_timestamp";
    }
    return "unknown";
}

namespace {

// Identifiers arrive either as "id_str" strings or as bare numbers.
std::optional<std::string> id_field(const json& obj, const char* str_key, const char* num_key) {
    if (auto it = obj.find(str_key); it != obj.end() && it->is_string()) {
        return it->get<std::string>();
    }
    if (auto it = obj.find(num_key); it != obj.end()) {
        if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
        if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
        if (it->is_string()) return it->get<std::string>();
    }
    return std::nullopt;
}

std::string string_field(const json& obj, const char* key) {
    if (auto it = obj.find(key); it != obj.end() && it->is_string()) return it->get<std::string>();
    return {};
}

std::uint64_t count_field(const json& obj, const char* key) {
    if (auto it = obj.find(key); it != obj.end() && it->is_number() && it->get<double>() >= 0) {
        return it->get<std::uint64_t>();
    }
    return 0;
}

bool bool_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_boolean() && it->get<bool>();
}

const json* object_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_object() ? &*it : nullptr;
}

std::optional<AccountRef> user_ref(const json* status) {
    if (status == nullptr) return std::nullopt;
    const json* user = object_field(*status, "user");
    if (user == nullptr) return std::nullopt;
    auto id = id_field(*user, "id_str", "id");
    if (!id) return std::nullopt;
    return AccountRef{*id, string_field(*user, "screen_name")};
}

std::optional<Timestamp> tweet_time(const json& obj) {
    if (auto it = obj.find("created_at"); it != obj.end() && it->is_string()) {
        return parse_timestamp(it->get_ref<const std::string&>());
    }
    if (auto it = obj.find("timestamp_ms"); it != obj.end()) {
        std::int64_t ms = 0;
        if (it->is_string()) {
            const auto& s = it->get_ref<const std::string&>();
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), ms);
            if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
        } else if (it->is_number_integer()) {
            ms = it->get<std::int64_t>();
        } else {
            return std::nullopt;
        }
        return Timestamp{std::chrono::seconds{ms / 1000}};
    }
    return std::nullopt;
}

bool is_platform_notice(const json& obj) {
    static constexpr const char* kNoticeKeys[] = {"delete", "limit", "scrub_geo", "status_withheld",
                                                  "user_withheld", "disconnect", "warning"};
    for (const char* key : kNoticeKeys) {
        if (obj.contains(key)) return true;
    }
    return false;
}

}  // namespace

ParsedLine parse_tweet_record(std::string_view raw_line) {
    ParsedLine out;
    if (text::trim(raw_line).empty()) {
        out.skip = SkipReason::KeepAlive;
        return out;
    }
    json obj = json::parse(raw_line.begin(), raw_line.end(), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        out.skip = SkipReason::MalformedJson;
        return out;
    }
    auto tweet_id = id_field(obj, "id_str", "id");
    const json* user = object_field(obj, "user");
    if (!tweet_id && is_platform_notice(obj)) {
        out.skip = SkipReason::NonTweet;
        return out;
    }
    if (!tweet_id || user == nullptr) {
        out.skip = SkipReason::MissingField;
        return out;
    }
    auto author_id = id_field(*user, "id_str", "id");
    if (!author_id) {
        out.skip = SkipReason::MissingField;
        return out;
    }
    auto created = tweet_time(obj);
    if (!created) {
        out.skip = SkipReason::BadTimestamp;
        return out;
    }

    TweetRecord r;
    r.tweet_id = std::move(*tweet_id);
    r.author_id = *author_id;
    r.screen_name = string_field(*user, "screen_name");
    r.created_at = *created;
    r.verified = bool_field(*user, "verified");
    if (auto lang = string_field(obj, "lang"); !lang.empty()) r.lang = std::move(lang);

    const json* extended = object_field(obj, "extended_tweet");
    if (extended != nullptr && extended->contains("full_text")) {
        r.text = string_field(*extended, "full_text");
    } else if (obj.contains("full_text")) {
        r.text = string_field(obj, "full_text");
    } else {
        r.text = string_field(obj, "text");
    }

    const json* entities = extended != nullptr ? object_field(*extended, "entities") : nullptr;
    if (entities == nullptr) entities = object_field(obj, "entities");
    if (entities != nullptr) {
        if (auto it = entities->find("hashtags"); it != entities->end() && it->is_array()) {
            for (const auto& h : *it) {
                std::string tag = h.is_object() ? string_field(h, "text")
                                  : h.is_string() ? h.get<std::string>()
                                                  : std::string{};
                while (!tag.empty() && tag.front() == '#') tag.erase(0, 1);
                if (!tag.empty()) r.hashtags.push_back(text::fold_case(tag));
            }
        }
        if (auto it = entities->find("user_mentions"); it != entities->end() && it->is_array()) {
            for (const auto& m : *it) {
                if (!m.is_object()) continue;
                if (auto id = id_field(m, "id_str", "id")) {
                    r.mentions.push_back({*id, string_field(m, "screen_name")});
                }
            }
        }
        if (auto it = entities->find("urls"); it != entities->end() && it->is_array()) {
            for (const auto& u : *it) {
                if (!u.is_object()) continue;
                auto url = string_field(u, "expanded_url");
                if (url.empty()) url = string_field(u, "url");
                if (!url.empty()) r.urls.push_back(std::move(url));
            }
        }
    }
    const json* ext_entities = extended != nullptr ? object_field(*extended, "extended_entities")
                                                   : nullptr;
    if (ext_entities == nullptr) ext_entities = object_field(obj, "extended_entities");
    if (ext_entities == nullptr) ext_entities = entities;
    if (ext_entities != nullptr) {
        if (auto it = ext_entities->find("media"); it != ext_entities->end() && it->is_array()) {
            r.media_count = static_cast<std::uint32_t>(it->size());
        }
    }

    if (const json* rt = object_field(obj, "retweeted_status")) {
        r.retweeted_id = id_field(*rt, "id_str", "id");
        r.retweeted_author = user_ref(rt);
    }
    const json* qs = object_field(obj, "quoted_status");
    r.quoted_id = id_field(obj, "quoted_status_id_str", "quoted_status_id");
    if (!r.quoted_id && qs != nullptr) r.quoted_id = id_field(*qs, "id_str", "id");
    r.quoted_author = user_ref(qs);
    r.reply_to_id = id_field(obj, "in_reply_to_status_id_str", "in_reply_to_status_id");
    if (auto reply_user = id_field(obj, "in_reply_to_user_id_str", "in_reply_to_user_id")) {
        r.reply_to_author = AccountRef{*reply_user, string_field(obj, "in_reply_to_screen_name")};
    }

    AccountProfile p;
    p.account_id = r.author_id;
    p.screen_name = r.screen_name;
    if (auto it = user->find("created_at"); it != user->end() && it->is_string()) {
        if (auto ts = parse_timestamp(it->get_ref<const std::string&>())) p.created_at = *ts;
    }
    p.description = string_field(*user, "description");
    p.followers = count_field(*user, "followers_count");
    p.friends = count_field(*user, "friends_count");
    p.verified = r.verified;
    if (auto country = string_field(*user, "country"); !country.empty()) p.country = country;
    p.observed_at = r.created_at;
    p.observed_tweet_id = r.tweet_id;

    out.record = std::move(r);
    out.author = std::move(p);
    return out;
}

TweetClass classify_tweet(const TweetRecord& r) {
    if (r.retweeted_id) return TweetClass::Retweet;
    if (r.quoted_id) return TweetClass::Quote;
    if (r.reply_to_id) return TweetClass::Reply;
    return TweetClass::Original;
}

bool keyword_filter(const TweetRecord& r, std::span<const std::string> keywords) {
    if (keywords.empty()) throw InputError("keyword_filter: keyword list is empty");
    for (const auto& tag : r.hashtags) {
        for (const auto& k : keywords) {
            if (tag.find(k) != std::string::npos) return true;
        }
    }
    const std::string folded = text::fold_case(r.text);
    for (const auto& k : keywords) {
        if (folded.find(k) != std::string::npos) return true;
    }
    return false;
}

std::vector<std::string> load_keywords(const std::filesystem::path& path) {
    std::vector<std::string> out;
    for (const auto& line : io::read_lines(path)) {
        auto term = text::trim(line);
        if (term.empty() || term.front() == '#') continue;
        out.push_back(text::fold_case(term));
    }
    if (out.empty()) throw InputError("keywords file " + path.string() + " has no terms");
    return out;
}

std::map<Day, std::uint64_t> partition_by_day(std::span<const TweetRecord> records) {
    std::map<Day, std::uint64_t> daily;
    for (const auto& r : records) ++daily[day_of(r.created_at)];
    if (daily.size() > 1) {
        const Day last = daily.rbegin()->first;
        for (Day d = daily.begin()->first; d < last; d += std::chrono::days{1}) daily.try_emplace(d, 0);
    }
    return daily;
}

StreamStats stream_summary(std::span<const TweetRecord> records, std::uint64_t daily_cap) {
    StreamStats s;
    s.daily_cap = daily_cap;
    std::unordered_set<std::string_view> users;
    std::unordered_set<std::string_view> tags;
    std::unordered_set<std::string> domains;
    for (const auto& r : records) {
        ++s.total_tweets;
        users.insert(r.author_id);
        switch (classify_tweet(r)) {
            case TweetClass::Original: ++s.original_tweets; break;
            case TweetClass::Retweet: ++s.retweet_tweets; break;
            case TweetClass::Reply: ++s.reply_tweets; break;
            case TweetClass::Quote: ++s.quote_tweets; break;
        }
        s.hashtag_occurrences += r.hashtags.size();
        for (const auto& h : r.hashtags) tags.insert(h);
        s.images += r.media_count;
        s.url_occurrences += r.urls.size();
        for (const auto& u : r.urls) {
            if (auto d = text::normalize_domain(u); !d.empty()) domains.insert(std::move(d));
        }
        if (r.verified) ++s.verified_tweets;
    }
    s.unique_users = users.size();
    s.unique_hashtags = tags.size();
    s.unique_domains = domains.size();
    s.daily_counts = partition_by_day(records);
    for (const auto& [day, count] : s.daily_counts) {
        if (daily_cap > 0 && count >= daily_cap) s.days_at_cap.push_back(day);
    }
    return s;
}

namespace {

struct StatField {
    const char* key;
    const char* label;
    std::uint64_t StreamStats::*member;
};

constexpr StatField kStatFields[] = {
    {"total_tweets", "Total Tweets", &StreamStats::total_tweets},
    {"unique_users", "Total Unique Users", &StreamStats::unique_users},
    {"original_tweets", "Original Tweets", &StreamStats::original_tweets},
    {"retweet_tweets", "Retweet Tweets", &StreamStats::retweet_tweets},
    {"reply_tweets", "Reply Tweets", &StreamStats::reply_tweets},
    {"quote_tweets", "Quote Tweets", &StreamStats::quote_tweets},
    {"unique_hashtags", "Hashtags", &StreamStats::unique_hashtags},
    {"hashtag_occurrences", "Hashtag Occurrences", &StreamStats::hashtag_occurrences},
    {"images", "Images", &StreamStats::images},
    {"url_occurrences", "URLs", &StreamStats::url_occurrences},
    {"unique_domains", "Unique Domains", &StreamStats::unique_domains},
    {"verified_tweets", "Tweets from Verified Accounts", &StreamStats::verified_tweets},
};

}  // namespace

std::string format_stats_report(const StreamStats& s) {
    io::KeyValues kv;
    for (const auto& f : kStatFields) kv[f.key] = std::to_string(s.*(f.member));
    kv["daily_cap"] = std::to_string(s.daily_cap);
    std::string capped;
    for (const auto& d : s.days_at_cap) {
        if (!capped.empty()) capped.push_back(';');
        capped += format_day(d);
    }
    kv["days_at_cap"] = capped;
    kv["days"] = std::to_string(s.daily_counts.size());
    return io::format_key_values(kv);
}

StreamStats parse_stats_report(std::string_view text) {
    const auto kv = io::parse_key_values(text);
    auto get = [&](const std::string& key) -> std::uint64_t {
        auto it = kv.find(key);
        if (it == kv.end()) throw InputError("stats report missing '" + key + "'");
        return std::stoull(it->second);
    };
    StreamStats s;
    for (const auto& f : kStatFields) s.*(f.member) = get(f.key);
    s.daily_cap = get("daily_cap");
    if (auto it = kv.find("days_at_cap"); it != kv.end()) {
        std::string_view rest = it->second;
        while (!rest.empty()) {
            const auto semi = rest.find(';');
            if (auto d = parse_day(rest.substr(0, semi))) s.days_at_cap.push_back(*d);
            if (semi == std::string_view::npos) break;
            rest.remove_prefix(semi + 1);
        }
    }
    return s;
}

std::string format_daily_csv(const std::map<Day, std::uint64_t>& daily) {
    std::string out = "date,count\n";
    for (const auto& [day, count] : daily) {
        out += format_day(day);
        out.push_back(',');
        out += std::to_string(count);
        out.push_back('\n');
    }
    return out;
}

std::vector<StatRow> stats_rows(const StreamStats& s) {
    std::vector<StatRow> rows;
    for (const auto& f : kStatFields) rows.push_back({f.key, f.label, s.*(f.member)});
    return rows;
}

std::string format_stats_table(const StreamStats& s) {
    std::size_t width = 0;
    for (const auto& f : kStatFields) width = std::max(width, std::string_view(f.label).size());
    std::string out;
    for (const auto& f : kStatFields) {
        std::string label = f.label;
        label.resize(width + 2, ' ');
        out += label;
        out += with_thousands(s.*(f.member));
        out.push_back('\n');
    }
    if (!s.days_at_cap.empty()) {
        out += "note: " + std::to_string(s.days_at_cap.size()) + " day(s) reached the stream cap of " +
               with_thousands(s.daily_cap) + " tweets/day\n";
    }
    return out;
}

std::uint64_t IngestCounters::skipped_total() const {
    std::uint64_t n = 0;
    for (const auto& [reason, count] : skipped) n += count;
    return n;
}

std::uint64_t IngestCounters::parse_errors() const {
    std::uint64_t n = 0;
    for (const auto& [reason, count] : skipped) {
        if (is_parse_error(reason)) n += count;
    }
    return n;
}

void IngestCounters::merge(const IngestCounters& other) {
    lines += other.lines;
    parsed += other.parsed;
    filtered_out += other.filtered_out;
    duplicates += other.duplicates;
    for (const auto& [reason, count] : other.skipped) skipped[reason] += count;
}

std::optional<Timestamp> Corpus::last_timestamp() const {
    std::optional<Timestamp> last;
    for (const auto& r : records) {
        if (!last || r.created_at > *last) last = r.created_at;
    }
    return last;
}

namespace {

bool newer_observation(const AccountProfile& a, const AccountProfile& b) {
    if (a.observed_at != b.observed_at) return a.observed_at > b.observed_at;
    if (a.observed_tweet_id.size() != b.observed_tweet_id.size()) {
        return a.observed_tweet_id.size() > b.observed_tweet_id.size();
    }
    return a.observed_tweet_id > b.observed_tweet_id;
}

void merge_profile(std::map<std::string, AccountProfile>& profiles, AccountProfile p) {
    auto [it, inserted] = profiles.try_emplace(p.account_id, p);
    if (!inserted && newer_observation(p, it->second)) it->second = std::move(p);
}

struct Shard {
    std::vector<TweetRecord> records;
    std::vector<AccountProfile> profiles;
    IngestCounters counters;
};

void parse_shard(std::span<const std::string> lines, const LoadOptions& options, Shard& shard) {
    for (const auto& line : lines) {
        ++shard.counters.lines;
        auto parsed = parse_tweet_record(line);
        if (!parsed.ok()) {
            ++shard.counters.skipped[parsed.skip];
            continue;
        }
        ++shard.counters.parsed;
        if (!options.keywords.empty() && !keyword_filter(*parsed.record, options.keywords)) {
            ++shard.counters.filtered_out;
            continue;
        }
        shard.records.push_back(std::move(*parsed.record));
        shard.profiles.push_back(std::move(*parsed.author));
    }
}

class CorpusBuilder {
public:
    explicit CorpusBuilder(const LoadOptions& options) : options_(options) {
        threads_ = options.threads != 0 ? options.threads
                                        : std::max(1u, std::thread::hardware_concurrency());
    }

    void add(std::span<const std::string> lines) {
        const std::size_t per = std::max<std::size_t>(1, (lines.size() + threads_ - 1) / threads_);
        std::vector<Shard> shards((lines.size() + per - 1) / per);
        if (shards.size() <= 1) {
            if (!shards.empty()) parse_shard(lines, options_, shards[0]);
        } else {
            std::vector<std::jthread> workers;
            for (std::size_t i = 0; i < shards.size(); ++i) {
                const auto first = i * per;
                const auto count = std::min(per, lines.size() - first);
                workers.emplace_back([&, first, count, i] {
                    parse_shard(lines.subspan(first, count), options_, shards[i]);
                });
            }
        }
        // Merge in shard order so the result does not depend on scheduling.
        for (auto& shard : shards) {
            corpus_.counters.merge(shard.counters);
            for (std::size_t i = 0; i < shard.records.size(); ++i) {
                if (!seen_.insert(shard.records[i].tweet_id).second) {
                    ++corpus_.counters.duplicates;
                    continue;
                }
                corpus_.records.push_back(std::move(shard.records[i]));
                merge_profile(corpus_.profiles, std::move(shard.profiles[i]));
            }
        }
    }

    Corpus finish() { return std::move(corpus_); }

private:
    const LoadOptions& options_;
    unsigned threads_ = 1;
    Corpus corpus_;
    std::unordered_set<std::string> seen_;
};

}  // namespace

Corpus parse_lines(std::span<const std::string> lines, const LoadOptions& options) {
    CorpusBuilder builder(options);
    const std::size_t step = std::max<std::size_t>(1, options.shard_lines);
    for (std::size_t i = 0; i < lines.size(); i += step) {
        builder.add(lines.subspan(i, std::min(step, lines.size() - i)));
    }
    return builder.finish();
}

Corpus load_corpus(std::span<const std::filesystem::path> files, const LoadOptions& options) {
    CorpusBuilder builder(options);
    const std::size_t step = std::max<std::size_t>(1, options.shard_lines);
    std::vector<std::string> batch;
    batch.reserve(step);
    for (const auto& file : files) {
        io::LineReader reader(file);
        std::string line;
        while (reader.next(line)) {
            batch.push_back(line);
            if (batch.size() == step) {
                builder.add(batch);
                batch.clear();
            }
        }
    }
    if (!batch.empty()) builder.add(batch);
    return builder.finish();
}

std::size_t apply_country_annotations(Corpus& corpus, const std::filesystem::path& csv) {
    const auto table = io::read_csv(csv);
    const auto id_col = table.column("account_id");
    const auto country_col = table.column("country");
    std::size_t applied = 0;
    for (const auto& row : table.rows) {
        auto it = corpus.profiles.find(row[id_col]);
        if (it == corpus.profiles.end() || row[country_col].empty()) continue;
        it->second.country = row[country_col];
        ++applied;
    }
    return applied;
}

}  // namespace streamlens::ingest
