#pragma once

#include <sqlite3.h>

#include <stdexcept>
#include <string>

namespace testsupport {

// Builds the small clinic-flavored database the tests execute queries
// against. Opens writable (unlike the library, which only ever reads).
inline void make_fixture_db(const std::string& path) {
    sqlite3* db = nullptr;
    if (sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                        nullptr) != SQLITE_OK) {
        const std::string msg = db != nullptr ? sqlite3_errmsg(db) : "open failed";
        sqlite3_close(db);
        throw std::runtime_error("fixture db '" + path + "': " + msg);
    }
    const char* schema = R"sql(
        CREATE TABLE patients (id INTEGER PRIMARY KEY, name TEXT, age INTEGER);
        CREATE TABLE admissions (id INTEGER PRIMARY KEY, patient_id INTEGER,
                                 diagnosis TEXT, cost REAL);
        INSERT INTO patients VALUES (1, 'ada', 34), (2, 'grace', 41), (3, 'alan', 29);
        INSERT INTO admissions VALUES
            (1, 1, 'flu', 100.5),
            (2, 2, 'fracture', 2500.0),
            (3, 1, 'checkup', 75.25),
            (4, 3, 'flu', 98.0);
    )sql";
    char* err = nullptr;
    if (sqlite3_exec(db, schema, nullptr, nullptr, &err) != SQLITE_OK) {
        const std::string msg = err != nullptr ? err : "exec failed";
        sqlite3_free(err);
        sqlite3_close(db);
        throw std::runtime_error("fixture db '" + path + "': " + msg);
    }
    sqlite3_close(db);
}

} // namespace testsupport
