#pragma once

#include "streamlens/common.hpp"
#include "streamlens/ingest.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streamlens::botmatch {

inline constexpr std::size_t kDefaultVocabulary = 4000;

/// Sparse account-by-token counts over the most frequent tokens.
struct DocTermMatrix {
    using Cell = std::pair<std::uint32_t, double>;  // column, value

    std::vector<std::string> accounts;      // sorted account ids
    std::vector<std::string> screen_names;  // parallel to accounts
    std::vector<std::string> vocab;         // frequency rank order
    std::vector<std::vector<Cell>> rows;    // cells sorted by column
    std::vector<double> norms;              // Euclidean row norms

    std::size_t size() const { return accounts.size(); }
    bool zero_row(std::size_t i) const { return norms[i] == 0.0; }
    std::optional<std::size_t> find(std::string_view account_id) const;
    /// Account id, or a screen name matched case-insensitively. NotFoundError otherwise.
    std::size_t resolve(std::string_view id_or_name) const;
    /// Multiplies every value of every row by `factor`, recomputing norms.
    DocTermMatrix scaled(double factor) const;
};

/// Every account that tweeted (optionally only in `lang`) gets a row. Tokens
/// are case-folded Unicode words of the URL-stripped text; the V most
/// frequent corpus tokens form the columns, boundary ties broken by token.
DocTermMatrix build_dtm(std::span<const ingest::TweetRecord> records, std::size_t vocabulary = kDefaultVocabulary,
                        const std::optional<std::string>& lang = std::nullopt);

/// Rebuilds a matrix from explicit rows (columns need not be sorted).
DocTermMatrix make_dtm(std::vector<std::string> accounts, std::vector<std::string> vocab,
                       std::vector<std::vector<DocTermMatrix::Cell>> rows,
                       std::vector<std::string> screen_names = {});

struct Similarity {
    double value = 0.0;
    bool degenerate = false;  // a zero row was involved
};

Similarity cosine_similarity(const DocTermMatrix& dtm, std::size_t a, std::size_t b);
Similarity cosine_similarity(const DocTermMatrix& dtm, std::string_view a, std::string_view b);

struct Match {
    std::string account_id;
    double similarity = 0.0;
    bool operator==(const Match&) const = default;
};

/// Accounts most similar to the seed, excluding the seed; ties by account id.
std::vector<Match> bot_match_query(const DocTermMatrix& dtm, std::string_view seed, std::size_t top_n);

/// Analyst-driven expansion from seed accounts. The frontier ranks unvisited
/// accounts by their highest similarity to any seed or accepted account.
class ExpansionSession {
public:
    ExpansionSession() = default;
    ExpansionSession(const DocTermMatrix& dtm, std::span<const std::string> seeds);

    const std::set<std::string>& seeds() const { return seeds_; }
    const std::set<std::string>& accepted() const { return accepted_; }
    const std::set<std::string>& rejected() const { return rejected_; }
    const std::vector<Match>& frontier() const { return frontier_; }
    int round() const { return round_; }

    /// New frontier of at most top_n accounts with positive similarity.
    void step(const DocTermMatrix& dtm, std::size_t top_n);
    /// InputError (and no change) when any id is not in the frontier.
    void accept(std::span<const std::string> ids);
    void reject(std::span<const std::string> ids);

    /// Restores a session from its visible state.
    static ExpansionSession restore(std::set<std::string> seeds, std::set<std::string> accepted,
                                    std::set<std::string> rejected, std::vector<Match> frontier, int round);

private:
    void move_from_frontier(std::span<const std::string> ids, std::set<std::string>& into);

    std::set<std::string> seeds_, accepted_, rejected_;
    std::vector<Match> frontier_;
    int round_ = 0;
    // Best similarity per account against the members folded in so far.
    std::vector<double> best_;
    std::set<std::string> folded_;
    std::size_t dtm_size_ = 0;
};

struct ExpansionAction {
    enum class Kind { Accept, Reject, Step };
    Kind kind = Kind::Step;
    std::vector<std::string> ids;
    std::size_t top_n = 20;
};

ExpansionSession expand(ExpansionSession session, const DocTermMatrix& dtm, const ExpansionAction& action);

/// `row,col,value` triplets plus accounts.csv (row,account_id,screen_name) and vocab.txt.
void export_dtm(const DocTermMatrix& dtm, const std::filesystem::path& dir);
DocTermMatrix import_dtm(const std::filesystem::path& dir);

}  // namespace streamlens::botmatch
