#include "streamlens/audit.hpp"

#include "streamlens/rng.hpp"
#include "streamlens/text.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <thread>

namespace streamlens::audit {

std::vector<std::string> sample_accounts(std::span<const std::string> all_ids, std::size_t k, std::uint64_t seed) {
    if (k > all_ids.size()) {
        throw InputError("sample of " + std::to_string(k) + " exceeds population of " +
                         std::to_string(all_ids.size()));
    }
    Rng rng(seed);
    auto picked = rng.sample_indices(all_ids.size(), k);
    std::sort(picked.begin(), picked.end());
    std::vector<std::string> out;
    out.reserve(k);
    for (auto i : picked) out.push_back(all_ids[i]);
    return out;
}

std::string_view to_string(AccountStatus s) {
    switch (s) {
        case AccountStatus::Exists: return "exists";
        case AccountStatus::Suspended: return "suspended";
        case AccountStatus::Deleted: return "deleted";
    }
    return "unknown";
}

AccountStatus parse_account_status(std::string_view text) {
    const auto v = text::ascii_lower(text::trim(text));
    if (v == "exists") return AccountStatus::Exists;
    if (v == "suspended") return AccountStatus::Suspended;
    if (v == "deleted") return AccountStatus::Deleted;
    throw InputError("unknown account status '" + std::string(text) + "'");
}

FixtureClient::FixtureClient(std::unordered_map<std::string, AccountStatus> statuses)
    : statuses_(std::move(statuses)) {}

FixtureClient FixtureClient::load(const std::filesystem::path& csv) {
    const auto table = io::read_csv(csv);
    const auto id = table.column("account_id"), status = table.column("status");
    std::unordered_map<std::string, AccountStatus> statuses;
    statuses.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (!statuses.emplace(row[id], parse_account_status(row[status])).second) {
            throw InputError(csv.string() + ": duplicate account " + row[id]);
        }
    }
    return FixtureClient(std::move(statuses));
}

std::unordered_set<std::string> FixtureClient::batch_lookup(std::span<const std::string> ids) {
    std::unordered_set<std::string> out;
    for (const auto& id : ids) {
        auto it = statuses_.find(id);
        if (it != statuses_.end() && it->second == AccountStatus::Exists) out.insert(id);
    }
    return out;
}

AccountStatus FixtureClient::probe(const std::string& id) {
    auto it = statuses_.find(id);
    return it == statuses_.end() ? AccountStatus::Deleted : it->second;
}

std::uint64_t fingerprint(std::span<const std::string> ids) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& id : ids) {
        for (unsigned char c : id) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::uint64_t to_u64(const io::KeyValues& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError("missing key '" + key + "'");
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("bad integer for '" + key + "'");
    return v;
}

double to_real(const io::KeyValues& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError("missing key '" + key + "'");
    double v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("bad number for '" + key + "'");
    return v;
}

std::string join_ids(std::span<const std::string> ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ' ';
        out += id;
    }
    return out;
}

std::vector<std::string> split_ids(const io::KeyValues& kv, const std::string& key) {
    std::vector<std::string> out;
    auto it = kv.find(key);
    if (it == kv.end()) return out;
    std::string_view s = it->second;
    while (!s.empty()) {
        const auto sp = s.find(' ');
        if (sp != 0) out.emplace_back(s.substr(0, sp));
        if (sp == std::string_view::npos) break;
        s.remove_prefix(sp + 1);
    }
    return out;
}

}  // namespace

std::string format_checkpoint(const AuditProgress& p) {
    io::KeyValues kv{
        {"total", std::to_string(p.total)},
        {"ids_fingerprint", std::to_string(p.ids_fingerprint)},
        {"cursor", std::to_string(p.cursor)},
        {"existing", std::to_string(p.existing)},
        {"missing", std::to_string(p.missing)},
        {"suspended", std::to_string(p.suspended)},
        {"deleted", std::to_string(p.deleted)},
        {"reappeared", std::to_string(p.reappeared)},
        {"suspended_ids", join_ids(p.suspended_ids)},
    };
    return io::format_key_values(kv);
}

AuditProgress parse_checkpoint(std::string_view text) {
    const auto kv = io::parse_key_values(text);
    AuditProgress p;
    p.total = to_u64(kv, "total");
    p.ids_fingerprint = to_u64(kv, "ids_fingerprint");
    p.cursor = to_u64(kv, "cursor");
    p.existing = to_u64(kv, "existing");
    p.missing = to_u64(kv, "missing");
    p.suspended = to_u64(kv, "suspended");
    p.deleted = to_u64(kv, "deleted");
    p.reappeared = to_u64(kv, "reappeared");
    p.suspended_ids = split_ids(kv, "suspended_ids");
    if (p.cursor > p.total || p.suspended + p.deleted != p.missing || p.suspended_ids.size() != p.suspended) {
        throw InputError("audit checkpoint is inconsistent");
    }
    return p;
}

namespace {

template <typename F>
auto with_retries(const AuditOptions& options, F&& call) {
    auto backoff = options.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return call();
        } catch (const TransportError&) {
            if (attempt >= options.max_attempts) throw;
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, options.max_backoff);
    }
}

std::vector<AccountStatus> probe_all(std::span<const std::string> ids, AccountStatusClient& client,
                                     const AuditOptions& options) {
    std::vector<AccountStatus> out(ids.size());
    const std::size_t workers = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(ids.size(), 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            out[i] = with_retries(options, [&] { return client.probe(ids[i]); });
        }
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < ids.size(); i += workers) {
                        out[i] = with_retries(options, [&] { return client.probe(ids[i]); });
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace

AuditReport run_audit(std::span<const std::string> ids, AccountStatusClient& client, const AuditOptions& options,
                      const std::optional<AuditProgress>& resume) {
    if (options.batch_size == 0) throw InputError("audit batch size must be at least 1");
    if (options.max_attempts < 1) throw InputError("audit needs at least one attempt per call");
    AuditProgress progress;
    progress.total = ids.size();
    progress.ids_fingerprint = fingerprint(ids);
    if (resume) {
        if (resume->total != progress.total || resume->ids_fingerprint != progress.ids_fingerprint) {
            throw InputError("audit checkpoint belongs to a different id list");
        }
        progress = *resume;
    }

    while (progress.cursor < ids.size()) {
        const auto begin = progress.cursor;
        const auto end = std::min<std::uint64_t>(ids.size(), begin + options.batch_size);
        const auto batch = ids.subspan(begin, end - begin);
        AuditProgress next = progress;
        try {
            const auto existing = with_retries(options, [&] { return client.batch_lookup(batch); });
            std::vector<std::string> missing;
            for (const auto& id : batch) {
                if (existing.contains(id)) {
                    ++next.existing;
                } else {
                    missing.push_back(id);
                }
            }
            const auto statuses = probe_all(missing, client, options);
            for (std::size_t i = 0; i < missing.size(); ++i) {
                switch (statuses[i]) {
                    case AccountStatus::Exists:
                        ++next.existing;
                        ++next.reappeared;
                        break;
                    case AccountStatus::Suspended:
                        ++next.missing;
                        ++next.suspended;
                        next.suspended_ids.push_back(missing[i]);
                        break;
                    case AccountStatus::Deleted:
                        ++next.missing;
                        ++next.deleted;
                        break;
                }
            }
        } catch (const TransportError& e) {
            throw PartialAuditError("audit stopped at id " + std::to_string(progress.cursor) + " of " +
                                        std::to_string(progress.total) + ": " + e.what(),
                                    progress);
        }
        next.cursor = end;
        if (options.checkpoint) io::write_file_atomic(*options.checkpoint, format_checkpoint(next));
        progress = std::move(next);
    }

    AuditReport r;
    r.total_sampled = progress.total;
    r.existing = progress.existing;
    r.missing = progress.missing;
    r.suspended = progress.suspended;
    r.deleted = progress.deleted;
    r.reappeared = progress.reappeared;
    r.suspended_ids = std::move(progress.suspended_ids);
    std::sort(r.suspended_ids.begin(), r.suspended_ids.end());
    return r;
}

ProportionEstimate proportion_ci(std::uint64_t hits, std::uint64_t n, double confidence,
                                 ProportionEstimate::Method method) {
    if (n == 0) throw InputError("proportion_ci: sample size must be at least 1");
    if (hits > n) throw InputError("proportion_ci: hits exceed sample size");
    if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("proportion_ci: confidence must lie in (0,1)");
    const double z =
        boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - (1.0 - confidence) / 2.0);
    const double nn = static_cast<double>(n);
    ProportionEstimate e;
    e.p_hat = static_cast<double>(hits) / nn;
    e.confidence = confidence;
    e.n = n;
    e.method = method;
    double centre = e.p_hat;
    if (method == ProportionEstimate::Method::Wald) {
        e.half_width = z * std::sqrt(e.p_hat * (1.0 - e.p_hat) / nn);
    } else {
        const double z2 = z * z;
        const double denom = 1.0 + z2 / nn;
        centre = (e.p_hat + z2 / (2.0 * nn)) / denom;
        e.half_width = z / denom * std::sqrt(e.p_hat * (1.0 - e.p_hat) / nn + z2 / (4.0 * nn * nn));
    }
    e.lower = std::clamp(centre - e.half_width, 0.0, 1.0);
    e.upper = std::clamp(centre + e.half_width, 0.0, 1.0);
    return e;
}

void attach_estimates(AuditReport& report, double confidence, ProportionEstimate::Method method) {
    report.missing_estimate = proportion_ci(report.missing, report.total_sampled, confidence, method);
    report.suspended_estimate = proportion_ci(report.suspended, report.total_sampled, confidence, method);
}

SuspendedActivity suspended_activity(std::span<const std::string> suspended_ids,
                                     std::span<const ingest::TweetRecord> records, const BotScoreTable* scores,
                                     double t) {
    SuspendedActivity a;
    const std::unordered_set<std::string> members(suspended_ids.begin(), suspended_ids.end());
    if (members.empty()) return a;
    for (const auto& r : records) {
        if (members.contains(r.author_id)) ++a.tweet_count;
    }
    if (scores) {
        for (const auto& id : members) {
            if (auto s = scores->find(id)) {
                ++a.scored;
                if (*s >= t) ++a.botlike;
            }
        }
    }
    if (a.scored > 0) a.botlike_share = static_cast<double>(a.botlike) / static_cast<double>(a.scored);
    return a;
}

double rate_budget(std::uint64_t total_items, std::uint64_t page_size, std::uint64_t pages_per_minute) {
    if (page_size == 0) throw InputError("rate_budget: page size must be at least 1");
    if (pages_per_minute == 0) throw InputError("rate_budget: pages per minute must be at least 1");
    const std::uint64_t pages = total_items / page_size + (total_items % page_size != 0 ? 1 : 0);
    return static_cast<double>(pages) / static_cast<double>(pages_per_minute);
}

std::string format_percent_ci(const ProportionEstimate& e, int digits) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.*f%% ± %.*f%%", digits, e.p_hat * 100.0, digits, e.half_width * 100.0);
    return buf;
}

namespace {

const char* method_name(ProportionEstimate::Method m) {
    return m == ProportionEstimate::Method::Wald ? "wald" : "wilson";
}

void put_estimate(io::KeyValues& kv, const std::string& prefix, const ProportionEstimate& e) {
    kv[prefix + "_p_hat"] = format_real(e.p_hat);
    kv[prefix + "_half_width"] = format_real(e.half_width);
    kv[prefix + "_lower"] = format_real(e.lower);
    kv[prefix + "_upper"] = format_real(e.upper);
}

ProportionEstimate get_estimate(const io::KeyValues& kv, const std::string& prefix, double confidence,
                                std::uint64_t n, ProportionEstimate::Method method) {
    ProportionEstimate e;
    e.p_hat = to_real(kv, prefix + "_p_hat");
    e.half_width = to_real(kv, prefix + "_half_width");
    e.lower = to_real(kv, prefix + "_lower");
    e.upper = to_real(kv, prefix + "_upper");
    e.confidence = confidence;
    e.n = n;
    e.method = method;
    return e;
}

}  // namespace

io::KeyValues audit_report_values(const AuditReport& r) {
    io::KeyValues kv{
        {"total_sampled", std::to_string(r.total_sampled)},
        {"existing", std::to_string(r.existing)},
        {"missing", std::to_string(r.missing)},
        {"suspended", std::to_string(r.suspended)},
        {"deleted", std::to_string(r.deleted)},
        {"reappeared", std::to_string(r.reappeared)},
        {"suspended_ids", join_ids(r.suspended_ids)},
    };
    if (r.missing_estimate) {
        kv["confidence"] = format_real(r.missing_estimate->confidence);
        kv["interval"] = method_name(r.missing_estimate->method);
        put_estimate(kv, "missing", *r.missing_estimate);
    }
    if (r.suspended_estimate) put_estimate(kv, "suspended", *r.suspended_estimate);
    if (r.activity) {
        kv["suspended_tweet_count"] = std::to_string(r.activity->tweet_count);
        kv["suspended_scored"] = std::to_string(r.activity->scored);
        kv["suspended_botlike"] = std::to_string(r.activity->botlike);
        kv["suspended_botlike_share"] =
            r.activity->botlike_share ? format_real(*r.activity->botlike_share) : "undefined";
    }
    return kv;
}

std::string format_audit_report(const AuditReport& r) { return io::format_key_values(audit_report_values(r)); }

AuditReport parse_audit_report(std::string_view text) {
    const auto kv = io::parse_key_values(text);
    AuditReport r;
    r.total_sampled = to_u64(kv, "total_sampled");
    r.existing = to_u64(kv, "existing");
    r.missing = to_u64(kv, "missing");
    r.suspended = to_u64(kv, "suspended");
    r.deleted = to_u64(kv, "deleted");
    r.reappeared = to_u64(kv, "reappeared");
    r.suspended_ids = split_ids(kv, "suspended_ids");
    if (kv.contains("missing_p_hat")) {
        const double confidence = to_real(kv, "confidence");
        const auto method = kv.at("interval") == "wilson" ? ProportionEstimate::Method::Wilson
                                                          : ProportionEstimate::Method::Wald;
        r.missing_estimate = get_estimate(kv, "missing", confidence, r.total_sampled, method);
        r.suspended_estimate = get_estimate(kv, "suspended", confidence, r.total_sampled, method);
    }
    if (kv.contains("suspended_tweet_count")) {
        SuspendedActivity a;
        a.tweet_count = to_u64(kv, "suspended_tweet_count");
        a.scored = to_u64(kv, "suspended_scored");
        a.botlike = to_u64(kv, "suspended_botlike");
        if (kv.at("suspended_botlike_share") != "undefined") a.botlike_share = to_real(kv, "suspended_botlike_share");
        r.activity = a;
    }
    return r;
}

std::string format_audit_summary(const AuditReport& r) {
    std::string out = "Sampled accounts: " + with_thousands(r.total_sampled) + "\n";
    out += "Missing: " + with_thousands(r.missing) + " (suspended " + with_thousands(r.suspended) + ", deleted " +
           with_thousands(r.deleted) + ")\n";
    if (r.missing_estimate) {
        const int pct = static_cast<int>(std::lround(r.missing_estimate->confidence * 100));
        out += "Missing share: " + format_percent_ci(*r.missing_estimate) + " (" + std::to_string(pct) + "% CI)\n";
        out += "Suspended share: " + format_percent_ci(*r.suspended_estimate) + " (" + std::to_string(pct) +
               "% CI)\n";
    }
    if (r.activity) {
        out += with_thousands(r.suspended) + " suspended accounts produced " + with_thousands(r.activity->tweet_count) +
               " tweets";
        if (r.activity->botlike_share) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f%%", *r.activity->botlike_share * 100.0);
            out += std::string("; ") + buf + " are bot-like";
        }
        out += "\n";
    }
    return out;
}

}  // namespace streamlens::audit
