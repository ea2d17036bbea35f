#include "core/execution.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "core/error.hpp"
#include "core/lexicon.hpp"

namespace probgate::exec {

namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
    Clock::time_point expiry;
};

int progress_callback(void* ctx) {
    const auto* deadline = static_cast<const Deadline*>(ctx);
    return Clock::now() > deadline->expiry ? 1 : 0;
}

bool contains_ci(const std::string& haystack, const char* needle) {
    auto it = std::search(haystack.begin(), haystack.end(), needle, needle + std::strlen(needle),
                          [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it != haystack.end();
}

ExecStatus classify_error(int rc, const std::string& message) {
    if (rc == SQLITE_INTERRUPT) {
        return ExecStatus::Timeout;
    }
    if (contains_ci(message, "no such table") || contains_ci(message, "no such column") ||
        contains_ci(message, "no such function") || contains_ci(message, "ambiguous column")) {
        return ExecStatus::SchemaError;
    }
    if (contains_ci(message, "syntax error") || contains_ci(message, "unrecognized token") ||
        contains_ci(message, "incomplete input")) {
        return ExecStatus::SyntaxError;
    }
    return ExecStatus::RuntimeError;
}

Cell column_cell(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_INTEGER:
            return Cell{static_cast<std::int64_t>(sqlite3_column_int64(stmt, col))};
        case SQLITE_FLOAT:
            return Cell{sqlite3_column_double(stmt, col)};
        case SQLITE_NULL:
            return Cell{Cell::Null{}};
        default: {
            // TEXT and BLOB both come back as their byte content.
            const unsigned char* text = sqlite3_column_text(stmt, col);
            const int size = sqlite3_column_bytes(stmt, col);
            return Cell{std::string(reinterpret_cast<const char*>(text), static_cast<size_t>(size))};
        }
    }
}

bool only_whitespace(const char* s) {
    for (; *s != '\0'; ++s) {
        if (std::isspace(static_cast<unsigned char>(*s)) == 0) return false;
    }
    return true;
}

// Cell equality for result matching: NULL equals NULL, integers and text
// compare exactly, any numeric pair involving a real uses a relative 1e-6
// tolerance against the gold value.
bool cells_match(const Cell& pred, const Cell& gold) {
    const bool pred_null = std::holds_alternative<Cell::Null>(pred.value);
    const bool gold_null = std::holds_alternative<Cell::Null>(gold.value);
    if (pred_null || gold_null) {
        return pred_null && gold_null;
    }
    const auto* pred_int = std::get_if<std::int64_t>(&pred.value);
    const auto* gold_int = std::get_if<std::int64_t>(&gold.value);
    if (pred_int != nullptr && gold_int != nullptr) {
        return *pred_int == *gold_int;
    }
    const auto* pred_text = std::get_if<std::string>(&pred.value);
    const auto* gold_text = std::get_if<std::string>(&gold.value);
    if (pred_text != nullptr && gold_text != nullptr) {
        return *pred_text == *gold_text;
    }
    if (pred_text != nullptr || gold_text != nullptr) {
        return false; // text vs numeric never matches
    }
    const double a = pred_int != nullptr ? static_cast<double>(*pred_int) : std::get<double>(pred.value);
    const double b = gold_int != nullptr ? static_cast<double>(*gold_int) : std::get<double>(gold.value);
    return std::fabs(a - b) <= 1e-6 * std::max(1.0, std::fabs(b));
}

bool rows_match(const Row& pred, const Row& gold) {
    if (pred.size() != gold.size()) return false;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!cells_match(pred[i], gold[i])) return false;
    }
    return true;
}

// Deterministic total order used to canonicalize rows for the multiset
// comparison. Numeric cells (integer or real) order by value so 1 and 1.0
// land in the same position on both sides.
struct CellLess {
    static int type_rank(const Cell& c) {
        if (std::holds_alternative<Cell::Null>(c.value)) return 0;
        if (std::holds_alternative<std::string>(c.value)) return 2;
        return 1;
    }
    bool operator()(const Cell& a, const Cell& b) const {
        const int ra = type_rank(a);
        const int rb = type_rank(b);
        if (ra != rb) return ra < rb;
        switch (ra) {
            case 0:
                return false;
            case 1: {
                const auto num = [](const Cell& c) {
                    if (const auto* i = std::get_if<std::int64_t>(&c.value)) {
                        return static_cast<double>(*i);
                    }
                    return std::get<double>(c.value);
                };
                const double na = num(a);
                const double nb = num(b);
                if (na != nb) return na < nb;
                // integers sort before reals of equal value, for determinism
                return std::holds_alternative<std::int64_t>(a.value) &&
                       std::holds_alternative<double>(b.value);
            }
            default:
                return std::get<std::string>(a.value) < std::get<std::string>(b.value);
        }
    }
    bool operator()(const Row& a, const Row& b) const {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), CellLess{});
    }
};

} // namespace

const char* exec_status_name(ExecStatus status) {
    switch (status) {
        case ExecStatus::Ok: return "OK";
        case ExecStatus::SyntaxError: return "SYNTAX_ERROR";
        case ExecStatus::SchemaError: return "SCHEMA_ERROR";
        case ExecStatus::RuntimeError: return "RUNTIME_ERROR";
        case ExecStatus::Timeout: return "TIMEOUT";
    }
    return "RUNTIME_ERROR";
}

Database::Database(const std::string& path) : path_(path) {
    const int rc = sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = db_ != nullptr ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
        sqlite3_close(db_);
        db_ = nullptr;
        throw_db("cannot open database '" + path + "' read-only: " + msg);
    }
}

Database::~Database() {
    if (db_ != nullptr) sqlite3_close(db_);
}

Database::Database(Database&& other) noexcept : db_(other.db_), path_(std::move(other.path_)) {
    other.db_ = nullptr;
}

Database& Database::operator=(Database&& other) noexcept {
    if (this != &other) {
        if (db_ != nullptr) sqlite3_close(db_);
        db_ = other.db_;
        path_ = std::move(other.path_);
        other.db_ = nullptr;
    }
    return *this;
}

ExecutionOutcome execute_sql(const std::string& sql, const Database& db,
                             std::int64_t timeout_ms, const std::string& id) {
    ExecutionOutcome outcome;
    outcome.id = id;
    const auto started = Clock::now();

    Deadline deadline{started + std::chrono::milliseconds(timeout_ms)};
    sqlite3* handle = db.handle();
    sqlite3_progress_handler(handle, 200, progress_callback, &deadline);

    const auto finish = [&](ExecStatus status, std::string detail) {
        sqlite3_progress_handler(handle, 0, nullptr, nullptr);
        outcome.status = status;
        outcome.detail = std::move(detail);
        outcome.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 Clock::now() - started)
                                 .count();
        if (status != ExecStatus::Ok) outcome.rows.clear();
        return outcome;
    };

    const char* cursor = sql.c_str();
    bool executed_any = false;
    while (*cursor != '\0' && !only_whitespace(cursor)) {
        sqlite3_stmt* stmt = nullptr;
        const char* tail = nullptr;
        int rc = sqlite3_prepare_v2(handle, cursor, -1, &stmt, &tail);
        if (rc != SQLITE_OK) {
            const std::string msg = sqlite3_errmsg(handle);
            sqlite3_finalize(stmt);
            return finish(classify_error(sqlite3_extended_errcode(handle) & 0xff, msg), msg);
        }
        if (stmt == nullptr) {
            if (tail == cursor) break; // no forward progress
            cursor = tail;             // comments or stray whitespace
            continue;
        }
        executed_any = true;
        outcome.rows.clear(); // keep only the last statement's result
        const int columns = sqlite3_column_count(stmt);
        while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
            Row row;
            row.reserve(static_cast<std::size_t>(columns));
            for (int col = 0; col < columns; ++col) {
                row.push_back(column_cell(stmt, col));
            }
            outcome.rows.push_back(std::move(row));
        }
        sqlite3_finalize(stmt);
        if (rc != SQLITE_DONE) {
            const std::string msg = sqlite3_errmsg(handle);
            return finish(classify_error(rc & 0xff, msg), msg);
        }
        cursor = tail;
    }
    if (!executed_any) {
        return finish(ExecStatus::SyntaxError, "empty statement");
    }
    return finish(ExecStatus::Ok, "");
}

bool has_top_level_order_by(const std::string& sql) {
    int depth = 0;
    bool pending_order = false;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    while (i < n) {
        const char c = sql[i];
        if (c == '\'' || c == '"' || c == '`') {
            const char quote = c;
            ++i;
            while (i < n) {
                if (sql[i] == quote) {
                    // doubled quote is an escaped quote inside the literal
                    if (i + 1 < n && sql[i + 1] == quote) {
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                ++i;
            }
            pending_order = false;
            continue;
        }
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(sql[i] == '*' && sql[i + 1] == '/')) ++i;
            i = std::min(n, i + 2);
            continue;
        }
        if (c == '(') {
            ++depth;
            ++i;
            pending_order = false;
            continue;
        }
        if (c == ')') {
            depth = std::max(0, depth - 1);
            ++i;
            pending_order = false;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_') {
            std::size_t start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) != 0 ||
                             sql[i] == '_')) {
                ++i;
            }
            const std::string word = upper_copy(sql.substr(start, i - start));
            if (depth == 0) {
                if (pending_order && word == "BY") return true;
                pending_order = word == "ORDER";
            }
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c)) == 0) {
            pending_order = false;
        }
        ++i;
    }
    return false;
}

int execution_accuracy(const std::string& pred_sql, const std::string& gold_sql,
                       const Database& db, std::int64_t timeout_ms) {
    ExecutionOutcome gold = execute_sql(gold_sql, db, timeout_ms);
    if (gold.status != ExecStatus::Ok) {
        throw_argument("gold SQL failed to execute (" +
                       std::string(exec_status_name(gold.status)) + "): " + gold.detail);
    }
    ExecutionOutcome pred = execute_sql(pred_sql, db, timeout_ms);
    if (pred.status != ExecStatus::Ok) {
        return 0;
    }
    if (pred.rows.size() != gold.rows.size()) {
        return 0;
    }
    if (!has_top_level_order_by(pred_sql)) {
        std::sort(pred.rows.begin(), pred.rows.end(), CellLess{});
        std::sort(gold.rows.begin(), gold.rows.end(), CellLess{});
    }
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
        if (!rows_match(pred.rows[i], gold.rows[i])) return 0;
    }
    return 1;
}

std::vector<GateDecision> grammatical_error_filter(const std::vector<GateDecision>& decisions,
                                                   const std::vector<GenerationRecord>& records,
                                                   const Database& db,
                                                   std::int64_t timeout_ms) {
    std::unordered_map<std::string, const GenerationRecord*> by_id;
    by_id.reserve(records.size());
    for (const auto& record : records) {
        by_id.emplace(record.id, &record);
    }
    std::vector<GateDecision> filtered;
    filtered.reserve(decisions.size());
    for (const auto& decision : decisions) {
        if (!decision.answer) {
            filtered.push_back(decision); // already gated upstream, never executed
            continue;
        }
        const auto it = by_id.find(decision.id);
        if (it == by_id.end()) {
            throw_argument("grammatical_error_filter: decision '" + decision.id +
                           "' has no matching record");
        }
        const ExecutionOutcome outcome = execute_sql(it->second->sql, db, timeout_ms, decision.id);
        if (outcome.status == ExecStatus::Ok) {
            filtered.push_back(decision);
        } else {
            filtered.push_back(GateDecision{decision.id, false, GateStage::ExecutionGate});
        }
    }
    return filtered;
}

gating::AccuracyMap accuracy_for_records(const std::vector<GenerationRecord>& records,
                                         const std::vector<EvalLabel>& labels,
                                         const Database& db,
                                         std::int64_t timeout_ms) {
    std::unordered_map<std::string, const EvalLabel*> by_id;
    by_id.reserve(labels.size());
    for (const auto& label : labels) {
        by_id.emplace(label.id, &label);
    }
    gating::AccuracyMap accuracy;
    for (const auto& record : records) {
        const auto it = by_id.find(record.id);
        if (it == by_id.end()) {
            throw_argument("no label for record '" + record.id + "'");
        }
        if (!it->second->answerable()) {
            continue;
        }
        try {
            accuracy[record.id] =
                execution_accuracy(record.sql, *it->second->gold_sql, db, timeout_ms);
        } catch (const Error& e) {
            throw_argument("record '" + record.id + "': " + e.what());
        }
    }
    return accuracy;
}

} // namespace probgate::exec
