#include "streamlens/synth.hpp"

#include "streamlens/io.hpp"
#include "streamlens/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace streamlens::synth {

using nlohmann::json;

namespace {

constexpr const char* kFlagCountries[] = {"US", "CA", "GB", "NG", "IN", "BR", "FR", "ES",
                                          "DE", "RU", "CN", "IT", "MX", "AU"};
constexpr const char* kBiasLabels[] = {"far-left", "left",        "center-left", "center",
                                       "center-right", "right",   "far-right",   "fake",
                                       "satire",   "conspiracy"};
constexpr const char* kFactualLabels[] = {"very-low", "low", "mixed", "high", "very-high"};
constexpr const char* kStateMediaCountries[] = {"RU", "CN", "IR", "TR"};

// Letters-only syllables keep every generated word a single word token and
// make it impossible to spell the keyword or any lexicon term by accident.
constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ne", "tu", "ra", "pe", "zo",
                                      "bi", "su", "da", "fe", "go", "hu", "ji", "wa"};

std::string syllable_word(std::size_t index, std::size_t salt) {
    std::string w;
    std::size_t x = index * 7919 + salt * 104729 + 1;
    for (int i = 0; i < 3; ++i) {
        w += kSyllables[x % 16];
        x /= 16;
    }
    // Suffix guarantees uniqueness across (index, salt).
    std::size_t tag = index * 31 + salt;
    do {
        w.push_back(static_cast<char>('a' + tag % 26));
        tag /= 26;
    } while (tag != 0);
    return w;
}

std::string flag_emoji(std::string_view code) {
    std::string out;
    for (char c : code) {
        const char32_t cp = 0x1F1E6 + static_cast<char32_t>(c - 'A');
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

struct Vocab {
    std::vector<std::vector<std::string>> group_words;
    std::vector<std::string> shared_words;
    std::vector<std::vector<std::string>> group_tags;
    std::vector<std::string> shared_tags;
};

Vocab make_vocab(std::size_t groups) {
    Vocab v;
    v.group_words.resize(groups);
    v.group_tags.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t i = 0; i < 60; ++i) v.group_words[g].push_back(syllable_word(i, g + 1));
        for (std::size_t i = 0; i < 15; ++i) {
            v.group_tags[g].push_back("topic" + syllable_word(i, g + 101));
        }
    }
    for (std::size_t i = 0; i < 40; ++i) v.shared_words.push_back(syllable_word(i, 999));
    for (std::size_t i = 0; i < 5; ++i) v.shared_tags.push_back("news" + syllable_word(i, 998));
    return v;
}

std::string text_upper_first(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::size_t pick_target(Rng& rng, const std::vector<std::vector<std::size_t>>& members,
                        std::size_t users, std::size_t group, double within) {
    if (rng.bernoulli(within)) {
        const auto& m = members[group];
        return m[rng.below(m.size())];
    }
    return rng.below(users);
}

}  // namespace

GeneratedCorpus generate(const SynthConfig& cfg) {
    if (cfg.users < 2 || cfg.groups == 0 || cfg.days <= 0) {
        throw InputError("synth: need at least 2 users, 1 group and 1 day");
    }
    Rng rng(cfg.seed);
    GeneratedCorpus out;
    out.config = cfg;
    for (std::size_t i = 0; i < 12; ++i) out.abusive_terms.push_back("vile" + syllable_word(i, 777));
    for (std::size_t i = 0; i < 24; ++i) {
        out.domains.push_back("site" + syllable_word(i, 555) + (i % 3 == 0 ? ".co.uk" : ".com"));
    }
    // Two thirds of the domains appear in the bias dictionary.
    for (std::size_t i = 0; i < out.domains.size(); ++i) {
        if (i % 3 == 2) continue;
        out.bias_entries[out.domains[i]] = {kBiasLabels[i % 10], kFactualLabels[i % 5]};
    }

    const Vocab vocab = make_vocab(cfg.groups);
    std::vector<std::vector<std::size_t>> members(cfg.groups);
    const Timestamp corpus_start{cfg.start_day.time_since_epoch()};
    const Timestamp bot_era{Day{std::chrono::year{2020} / 2 / 1}.time_since_epoch()};
    const Timestamp human_era{Day{std::chrono::year{2009} / 1 / 1}.time_since_epoch()};
    static constexpr const char* kLangs[] = {"en", "en", "en", "en", "en", "en", "es", "es", "fr", "pt"};

    out.users.resize(cfg.users);
    for (std::size_t i = 0; i < cfg.users; ++i) {
        auto& u = out.users[i];
        u.account_id = std::to_string(100000 + i);
        u.screen_name = "user" + std::to_string(i);
        u.group = i % cfg.groups;
        members[u.group].push_back(i);
        u.bot = rng.bernoulli(cfg.bot_fraction);
        u.score = u.bot ? 0.35 + 0.65 * std::sqrt(rng.uniform()) : 0.7 * rng.uniform() * rng.uniform();
        u.score = std::round(u.score * 1e4) / 1e4;
        u.verified = !u.bot && rng.bernoulli(0.03);
        u.lang = kLangs[rng.below(10)];
        const auto span_begin = u.bot && rng.bernoulli(0.7) ? bot_era : human_era;
        const auto span = (corpus_start - span_begin).count();
        u.created_at = span_begin + std::chrono::seconds{static_cast<std::int64_t>(rng.below(span))};
        const std::size_t n_flags = u.bot ? rng.below(7) : (rng.bernoulli(0.3) ? 1 + rng.below(2) : 0);
        std::string desc = "about " + vocab.shared_words[rng.below(vocab.shared_words.size())];
        for (std::size_t f = 0; f < n_flags; ++f) {
            u.flags.push_back(kFlagCountries[rng.below(std::size(kFlagCountries))]);
            desc += " " + flag_emoji(u.flags.back());
        }
        if (rng.bernoulli(0.05)) desc += " \xF0\x9F\x87\xBA lone";  // unpaired regional indicator
        u.description = desc;
        if (rng.bernoulli(0.8)) u.country = kFlagCountries[rng.below(std::size(kFlagCountries))];
    }
    for (std::size_t s = 0; s < std::min(cfg.state_media_accounts, cfg.users); ++s) {
        auto& u = out.users[s];
        u.state_media_country = kStateMediaCountries[s % std::size(kStateMediaCountries)];
        u.screen_name = "StateMedia" + std::to_string(s);
        u.verified = true;
    }

    const std::size_t n = cfg.tweets;
    // Exact-rate plants: choose precisely round(rate * n) tweets.
    auto exact_mask = [&](double rate) {
        std::vector<char> mask(n, 0);
        const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
        for (auto idx : rng.sample_indices(n, std::min(k, n))) mask[idx] = 1;
        return mask;
    };
    const auto keyword_mask = exact_mask(cfg.keyword_rate);
    const auto corrupt_mask = exact_mask(cfg.corrupt_rate);
    // Days assigned round-robin, then shuffled: each day gets n/days (+1) tweets.
    std::vector<int> day_of_tweet(n);
    for (std::size_t i = 0; i < n; ++i) day_of_tweet[i] = static_cast<int>(i % static_cast<std::size_t>(cfg.days));
    rng.shuffle(day_of_tweet);

    out.tweets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& t = out.tweets[i];
        t.tweet_id = std::to_string(1240000000000000000ull + i * 17);
        // Popular accounts (state media first) attract more tweets of their own.
        t.author = rng.bernoulli(0.2) ? rng.below(std::max<std::size_t>(1, cfg.users / 20))
                                      : rng.below(cfg.users);
        const auto& author = out.users[t.author];
        t.created_at = Timestamp{(cfg.start_day + std::chrono::days{day_of_tweet[i]}).time_since_epoch()} +
                       std::chrono::seconds{static_cast<std::int64_t>(rng.below(86400))};
        t.lang = author.lang;

        auto target = [&] {
            if (rng.bernoulli(cfg.p_self_interaction)) return t.author;
            if (cfg.state_media_accounts > 0 && rng.bernoulli(0.05)) {
                return static_cast<std::size_t>(rng.below(std::min(cfg.state_media_accounts, cfg.users)));
            }
            return pick_target(rng, members, cfg.users, author.group, cfg.within_group);
        };
        const double r = rng.uniform();
        if (r < cfg.p_retweet) {
            t.retweet_of = target();
            if (rng.bernoulli(cfg.p_extra_reference)) t.quote_of = target();
        } else if (r < cfg.p_retweet + cfg.p_quote) {
            t.quote_of = target();
            if (rng.bernoulli(cfg.p_extra_reference)) t.reply_to = target();
            t.quote_without_author = rng.bernoulli(0.02);
        } else if (r < cfg.p_retweet + cfg.p_quote + cfg.p_reply) {
            t.reply_to = target();
        }

        const auto group_bias = rng.bernoulli(0.85) ? author.group : rng.below(cfg.groups);
        std::string body;
        const std::size_t words = 6 + rng.below(8);
        for (std::size_t w = 0; w < words; ++w) {
            const auto& pool = rng.bernoulli(0.75) ? vocab.group_words[group_bias] : vocab.shared_words;
            if (!body.empty()) body.push_back(' ');
            body += pool[rng.below(pool.size())];
        }
        if (keyword_mask[i]) {
            body += rng.bernoulli(0.5) ? " COVID19 update" : " covid19";
            t.keyword = true;
        }
        if (rng.bernoulli(cfg.abusive_rate * (author.bot ? 2.0 : 0.5))) {
            const auto& term = out.abusive_terms[rng.below(out.abusive_terms.size())];
            body += rng.bernoulli(0.5) ? " " + term : " " + text_upper_first(term);
            t.abusive = true;
        }
        const std::size_t tags = rng.below(4);
        for (std::size_t h = 0; h < tags; ++h) {
            const auto& pool = rng.bernoulli(0.85) ? vocab.group_tags[group_bias] : vocab.shared_tags;
            std::string tag = pool[rng.below(pool.size())];
            if (rng.bernoulli(0.2)) tag[0] = static_cast<char>(tag[0] - 'a' + 'A');
            t.hashtags.push_back(tag);
            body += " #" + tag;
        }
        const std::size_t n_mentions = t.retweet_of ? 0 : rng.below(3);
        if (t.retweet_of) t.mentions.push_back(*t.retweet_of);
        for (std::size_t m = 0; m < n_mentions; ++m) t.mentions.push_back(target());
        if (rng.bernoulli(cfg.url_rate)) {
            const std::size_t n_urls = 1 + rng.below(2);
            for (std::size_t k = 0; k < n_urls; ++k) {
                const auto& d = out.domains[rng.below(out.domains.size())];
                t.url_domains.push_back(d);
                t.urls.push_back((rng.bernoulli(0.5) ? "https://www." : "http://") + d + "/story/" +
                                 std::to_string(rng.below(100000)));
                body += " https://t.co/x" + std::to_string(rng.below(1000000));
            }
        }
        t.media = rng.bernoulli(0.1) ? 1 + static_cast<std::uint32_t>(rng.below(3)) : 0;
        t.text = t.retweet_of ? "RT @" + out.users[*t.retweet_of].screen_name + ": " + body : body;
        t.corrupted = corrupt_mask[i] != 0;
    }

    // Emit lines; notices and keep-alives at seeded positions.
    const std::size_t total_lines = n + cfg.notice_lines + cfg.keepalive_lines;
    std::vector<int> kinds(total_lines, 0);
    for (std::size_t i = 0; i < cfg.notice_lines; ++i) kinds[n + i] = 1;
    for (std::size_t i = 0; i < cfg.keepalive_lines; ++i) kinds[n + cfg.notice_lines + i] = 2;
    rng.shuffle(kinds);
    std::size_t next_tweet = 0;
    out.lines.reserve(total_lines);
    for (int kind : kinds) {
        if (kind == 1) {
            out.lines.push_back(R"({"delete":{"status":{"id":1,"id_str":"1","user_id":2,"user_id_str":"2"}}})");
        } else if (kind == 2) {
            out.lines.emplace_back(rng.bernoulli(0.5) ? "" : "  ");
        } else {
            const auto& t = out.tweets[next_tweet++];
            std::string line = tweet_json(out, t);
            if (t.corrupted) line.resize(line.size() / 2);
            out.lines.push_back(std::move(line));
        }
    }
    return out;
}

namespace {

json user_json(const SynthUser& u) {
    json j = {{"id", std::stoull(u.account_id)},
              {"id_str", u.account_id},
              {"screen_name", u.screen_name},
              {"created_at", format_platform_timestamp(u.created_at)},
              {"description", u.description},
              {"followers_count", u.bot ? 50 : 500},
              {"friends_count", 300},
              {"verified", u.verified}};
    if (u.country) j["country"] = *u.country;
    return j;
}

}  // namespace

std::string tweet_json(const GeneratedCorpus& corpus, const SynthTweet& t) {
    const auto& users = corpus.users;
    json j = {{"created_at", format_platform_timestamp(t.created_at)},
              {"id", std::stoull(t.tweet_id)},
              {"id_str", t.tweet_id},
              {"text", t.text},
              {"lang", t.lang},
              {"user", user_json(users[t.author])}};
    json hashtags = json::array();
    for (const auto& h : t.hashtags) hashtags.push_back({{"text", h}});
    json mentions = json::array();
    for (auto m : t.mentions) {
        mentions.push_back({{"id_str", users[m].account_id}, {"screen_name", users[m].screen_name}});
    }
    json urls = json::array();
    for (const auto& u : t.urls) urls.push_back({{"url", "https://t.co/abc"}, {"expanded_url", u}});
    j["entities"] = {{"hashtags", hashtags}, {"user_mentions", mentions}, {"urls", urls}};
    if (t.media > 0) {
        json media = json::array();
        for (std::uint32_t k = 0; k < t.media; ++k) media.push_back({{"type", "photo"}});
        j["extended_entities"] = {{"media", media}};
    }
    if (t.retweet_of) {
        j["retweeted_status"] = {{"id_str", t.tweet_id + "0"}, {"user", user_json(users[*t.retweet_of])}};
    }
    if (t.quote_of) {
        j["quoted_status_id_str"] = t.tweet_id + "1";
        if (!t.quote_without_author) {
            j["quoted_status"] = {{"id_str", t.tweet_id + "1"}, {"user", user_json(users[*t.quote_of])}};
        }
    }
    if (t.reply_to) {
        j["in_reply_to_status_id_str"] = t.tweet_id + "2";
        j["in_reply_to_user_id_str"] = users[*t.reply_to].account_id;
        j["in_reply_to_screen_name"] = users[*t.reply_to].screen_name;
    }
    return j.dump();
}

BundlePaths write_bundle(const GeneratedCorpus& corpus, const std::filesystem::path& dir,
                         const BundleOptions& options) {
    namespace fs = std::filesystem;
    BundlePaths p;
    p.root = dir;
    p.corpus_dir = dir / "corpus";
    p.keywords = dir / "keywords.txt";
    p.scores = dir / "scores_bothunter_tier1.csv";
    p.labels = dir / "labels.csv";
    p.audit_fixture = dir / "audit_fixture.csv";
    p.bias_dictionary = dir / "bias.csv";
    p.lexicon = dir / "lexicon.txt";
    p.state_media = dir / "state_media.csv";
    p.countries = dir / "countries.csv";
    p.config = dir / "config.json";
    fs::create_directories(p.corpus_dir);

    const std::size_t shards = std::max<std::size_t>(1, options.shards);
    std::vector<std::string> shard_text(shards);
    for (std::size_t i = 0; i < corpus.lines.size(); ++i) {
        shard_text[i * shards / corpus.lines.size()] += corpus.lines[i] + "\n";
    }
    for (std::size_t s = 0; s < shards; ++s) {
        char name[48];
        std::snprintf(name, sizeof name, "stream-%03zu.jsonl.gz", s);
        io::write_gzip_file(p.corpus_dir / name, shard_text[s]);
    }

    io::write_file_atomic(p.keywords, "# stream keywords\n" + corpus.config.keyword + "\nwuhan virus\n");

    std::string scores = "account_id,score\n";
    std::string countries = "account_id,country\n";
    for (const auto& u : corpus.users) {
        scores += u.account_id + "," + format_real(u.score) + "\n";
        if (u.country) countries += u.account_id + "," + *u.country + "\n";
    }
    io::write_file_atomic(p.scores, scores);
    io::write_file_atomic(p.countries, countries);

    Rng rng(corpus.config.seed ^ 0x5eed);
    const auto label_n = std::min(options.label_sample, corpus.users.size());
    std::string labels = "account_id,label\n";
    for (auto idx : rng.sample_indices(corpus.users.size(), label_n)) {
        labels += corpus.users[idx].account_id + (corpus.users[idx].bot ? ",bot\n" : ",human\n");
    }
    io::write_file_atomic(p.labels, labels);

    std::string fixture = "account_id,status\n";
    for (const auto& u : corpus.users) {
        const double x = rng.uniform();
        const char* status = x < options.audit_suspended ? "suspended"
                             : x < options.audit_missing ? "deleted"
                                                         : "exists";
        fixture += u.account_id + "," + status + "\n";
    }
    io::write_file_atomic(p.audit_fixture, fixture);

    std::string bias = "domain,bias,factual\n";
    for (const auto& [domain, labels_pair] : corpus.bias_entries) {
        bias += domain + "," + labels_pair.first + "," + labels_pair.second + "\n";
    }
    io::write_file_atomic(p.bias_dictionary, bias);

    std::string lexicon = "# abusive terms\n";
    for (std::size_t i = 0; i < corpus.abusive_terms.size(); ++i) {
        lexicon += (i % 2 == 0 ? "en:" : "") + corpus.abusive_terms[i] + "\n";
    }
    io::write_file_atomic(p.lexicon, lexicon);

    std::string directory = "screen_name,country\n";
    for (const auto& u : corpus.users) {
        if (u.state_media_country) directory += u.screen_name + "," + *u.state_media_country + "\n";
    }
    io::write_file_atomic(p.state_media, directory);

    json config = {
        {"corpus", {{"input", "corpus"}, {"keywords", "keywords.txt"}, {"countries", "countries.csv"}}},
        {"network", {{"k_core_k", 10}, {"edge_sample_m", 2000}}},
        {"bots",
         {{"primary", "bothunter_tier1"},
          {"detectors", json::array({{{"name", "bothunter_tier1"},
                                      {"scores", "scores_bothunter_tier1.csv"},
                                      {"threshold", 0.5}}})},
          {"labels", "labels.csv"}}},
        {"audit", {{"fixture", "audit_fixture.csv"}, {"sample_size", corpus.users.size()}}},
        {"characterize",
         {{"bias_dictionary", "bias.csv"}, {"lexicon", "lexicon.txt"}, {"state_media", "state_media.csv"}}},
        {"topics", {{"k", corpus.config.groups}, {"iterations", 200}}},
        {"snapshot", {{"store", "store"}}},
    };
    io::write_file_atomic(p.config, config.dump(2) + "\n");
    return p;
}

}  // namespace streamlens::synth
