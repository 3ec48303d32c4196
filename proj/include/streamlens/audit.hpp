#pragma once

#include "streamlens/common.hpp"
#include "streamlens/ingest.hpp"
#include "streamlens/io.hpp"
#include "streamlens/scores.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace streamlens::audit {

/// Uniform sample of k ids without replacement, returned in population order.
/// InputError when k exceeds the population.
std::vector<std::string> sample_accounts(std::span<const std::string> all_ids, std::size_t k,
                                         std::uint64_t seed);

enum class AccountStatus { Exists, Suspended, Deleted };
std::string_view to_string(AccountStatus s);
AccountStatus parse_account_status(std::string_view text);

/// Transient failure talking to the status service; retried by run_audit.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Batch rehydration returns only the ids that still exist, without saying
/// anything about the rest; probing a single id tells suspended from deleted.
class AccountStatusClient {
public:
    virtual ~AccountStatusClient() = default;
    virtual std::unordered_set<std::string> batch_lookup(std::span<const std::string> ids) = 0;
    virtual AccountStatus probe(const std::string& id) = 0;
};

/// Recorded statuses from `account_id,status`. Ids absent from the fixture
/// behave as deleted accounts.
class FixtureClient : public AccountStatusClient {
public:
    explicit FixtureClient(std::unordered_map<std::string, AccountStatus> statuses);
    static FixtureClient load(const std::filesystem::path& csv);

    std::unordered_set<std::string> batch_lookup(std::span<const std::string> ids) override;
    AccountStatus probe(const std::string& id) override;

private:
    std::unordered_map<std::string, AccountStatus> statuses_;
};

/// JSON over HTTP: POST {base}/lookup {"ids":[...]} -> {"existing":[...]} and
/// GET {base}/probe/{id} -> {"status":"exists|suspended|deleted"}.
class HttpClient : public AccountStatusClient {
public:
    explicit HttpClient(const std::string& endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(10));
    ~HttpClient() override;

    std::unordered_set<std::string> batch_lookup(std::span<const std::string> ids) override;
    AccountStatus probe(const std::string& id) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

inline constexpr std::size_t kDefaultBatchSize = 100;

struct AuditOptions {
    std::size_t batch_size = kDefaultBatchSize;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{100};
    std::chrono::milliseconds max_backoff{2000};
    std::size_t parallelism = 1;  // concurrent probes within a batch
    std::optional<std::filesystem::path> checkpoint;  // rewritten after every batch
};

/// Tallies over the ids processed so far; `cursor` ids are fully done.
struct AuditProgress {
    std::uint64_t total = 0;
    std::uint64_t ids_fingerprint = 0;
    std::uint64_t cursor = 0;
    std::uint64_t existing = 0;
    std::uint64_t missing = 0;
    std::uint64_t suspended = 0;
    std::uint64_t deleted = 0;
    std::uint64_t reappeared = 0;  // missing from the batch, yet probed as existing
    std::vector<std::string> suspended_ids;
    bool operator==(const AuditProgress&) const = default;
};

std::string format_checkpoint(const AuditProgress& p);
AuditProgress parse_checkpoint(std::string_view text);
std::uint64_t fingerprint(std::span<const std::string> ids);

/// Retries exhausted. Carries the tallies of completed batches; pass
/// progress() back to run_audit to continue where it stopped.
class PartialAuditError : public Error {
public:
    PartialAuditError(const std::string& message, AuditProgress progress)
        : Error(message), progress_(std::move(progress)) {}
    const AuditProgress& progress() const { return progress_; }

private:
    AuditProgress progress_;
};

struct ProportionEstimate {
    enum class Method { Wald, Wilson };
    double p_hat = 0.0;
    double half_width = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double confidence = 0.95;
    std::uint64_t n = 0;
    Method method = Method::Wald;
};

/// Wald interval p +- z sqrt(p(1-p)/n) with z the two-sided normal quantile,
/// clamped to [0,1]. InputError for n = 0, hits > n or confidence outside (0,1).
ProportionEstimate proportion_ci(std::uint64_t hits, std::uint64_t n, double confidence = 0.95,
                                 ProportionEstimate::Method method = ProportionEstimate::Method::Wald);

struct SuspendedActivity {
    std::uint64_t tweet_count = 0;
    std::uint64_t scored = 0;
    std::uint64_t botlike = 0;  // score >= t
    std::optional<double> botlike_share;
};

SuspendedActivity suspended_activity(std::span<const std::string> suspended_ids,
                                     std::span<const ingest::TweetRecord> records, const BotScoreTable* scores,
                                     double t);

struct AuditReport {
    std::uint64_t total_sampled = 0;
    std::uint64_t existing = 0;
    std::uint64_t missing = 0;
    std::uint64_t suspended = 0;
    std::uint64_t deleted = 0;
    std::uint64_t reappeared = 0;
    std::vector<std::string> suspended_ids;  // sorted
    std::optional<ProportionEstimate> missing_estimate;
    std::optional<ProportionEstimate> suspended_estimate;
    std::optional<SuspendedActivity> activity;
};

/// Rehydrates ids in batches, probes every id the batch lookup did not
/// return, and tallies suspended versus deleted. Estimates are not attached.
AuditReport run_audit(std::span<const std::string> ids, AccountStatusClient& client,
                      const AuditOptions& options = {}, const std::optional<AuditProgress>& resume = std::nullopt);

void attach_estimates(AuditReport& report, double confidence = 0.95,
                      ProportionEstimate::Method method = ProportionEstimate::Method::Wald);

/// Minutes to page through `total_items` at `pages_per_minute`.
double rate_budget(std::uint64_t total_items, std::uint64_t page_size, std::uint64_t pages_per_minute);

/// "7.0842% ± 0.0503%".
std::string format_percent_ci(const ProportionEstimate& e, int digits = 4);

io::KeyValues audit_report_values(const AuditReport& r);
std::string format_audit_report(const AuditReport& r);
AuditReport parse_audit_report(std::string_view text);
std::string format_audit_summary(const AuditReport& r);

}  // namespace streamlens::audit
