#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "core/gating.hpp"
#include "core/model.hpp"

struct sqlite3;

namespace probgate::exec {

enum class ExecStatus {
    Ok,
    SyntaxError,
    SchemaError,
    RuntimeError,
    Timeout,
};

const char* exec_status_name(ExecStatus status);

/// One result cell. SQLite's dynamic typing maps onto exactly these four.
struct Cell {
    struct Null {
        bool operator==(const Null&) const = default;
    };
    std::variant<Null, std::int64_t, double, std::string> value;

    bool operator==(const Cell&) const = default;
};

using Row = std::vector<Cell>;

struct ExecutionOutcome {
    std::string id;
    ExecStatus status = ExecStatus::Ok;
    std::vector<Row> rows;     // meaningful only when status == Ok
    std::string detail;        // engine message for non-Ok statuses
    std::int64_t elapsed_ms = 0;
};

/// Read-only connection to a SQLite database file. Queries never mutate the
/// database; writes fail with a runtime status.
class Database {
public:
    explicit Database(const std::string& path); // throws Error(Db) when unopenable
    ~Database();

    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;
    Database(Database&& other) noexcept;
    Database& operator=(Database&& other) noexcept;

    sqlite3* handle() const noexcept { return db_; }
    const std::string& path() const noexcept { return path_; }

private:
    sqlite3* db_ = nullptr;
    std::string path_;
};

/// Runs `sql` and classifies the result. All failures come back as a status,
/// never an exception: parse-class errors -> SyntaxError, unknown
/// table/column -> SchemaError, expiry of timeout_ms -> Timeout, anything
/// else -> RuntimeError. Multi-statement strings execute in order and the
/// last statement's rows are kept.
ExecutionOutcome execute_sql(const std::string& sql, const Database& db,
                             std::int64_t timeout_ms, const std::string& id = "");

/// True when the query's outermost clause orders its output, in which case
/// result comparison respects row order.
bool has_top_level_order_by(const std::string& sql);

/// 1 iff `pred_sql` executes cleanly and its result matches `gold_sql`'s:
/// multiset comparison unless pred orders its output, exact equality for
/// integers/text/null, relative 1e-6 tolerance for reals. The gold query
/// must execute; a failing gold is a configuration error.
int execution_accuracy(const std::string& pred_sql, const std::string& gold_sql,
                       const Database& db, std::int64_t timeout_ms);

/// Execution gate: every passing decision whose SQL fails to execute is
/// turned into an abstention. Rank-gated records are never executed.
std::vector<GateDecision> grammatical_error_filter(const std::vector<GateDecision>& decisions,
                                                   const std::vector<GenerationRecord>& records,
                                                   const Database& db,
                                                   std::int64_t timeout_ms);

/// Execution accuracy for every answerable record, keyed by id. Used by the
/// sweep and the evaluator; unanswerable records get no entry.
gating::AccuracyMap accuracy_for_records(const std::vector<GenerationRecord>& records,
                                         const std::vector<EvalLabel>& labels,
                                         const Database& db,
                                         std::int64_t timeout_ms);

} // namespace probgate::exec
