#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace kinetic {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

// One checked statement.  Interval checks pass iff |measured - predicted| <=
// tolerance; predicate checks carry their own pass flag and leave predicted
// and tolerance empty.
struct Verdict {
    std::string id;
    std::string role;  // what the check establishes, in plain words
    bool predicate = false;
    double predicted = 0.0;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool exploratory = false;  // gating only under --strict
    std::string note;

    static Verdict interval(std::string id, std::string role, double predicted, double tolerance, double measured,
                            bool exploratory = false);
    // Passes iff measured <= bound.
    static Verdict at_most(std::string id, std::string role, double bound, double measured,
                           bool exploratory = false);
    static Verdict holds(std::string id, std::string role, bool ok, double measured, bool exploratory = false);
};

// Numeric table written as CSV (header row, %.12e numerics).
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
    std::string csv() const;
};

struct Report {
    std::string experiment;
    Json params = Json::object();
    Json results = Json::object();
    std::vector<Verdict> verdicts;
    std::vector<Table> tables;

    void add(Verdict v) { verdicts.push_back(std::move(v)); }
    // Every gating verdict passes (exploratory ones too when strict).
    bool passed(bool strict) const;
    Json to_json() const;
    std::string summary(bool strict) const;
};

// Combines sub-reports under one experiment name (used by `all`).
Report merge_reports(const std::string& experiment, const std::vector<Report>& parts);

// Writes <experiment>.json, <experiment>_summary.txt and one CSV per table
// into dir (created if needed).  No timestamps: those go to write_metadata.
void write_report(const std::string& dir, const Report& r, bool strict);
void write_metadata(const std::string& dir, const std::string& experiment, const Json& info);

// Field-wise diff of the verdicts of two reports: one line per changed field,
// naming the check id.  Throws PreconditionError on schema mismatch.
std::vector<std::string> report_diff(const Json& a, const Json& b);

// %.12e formatting shared by CSV writers.
std::string format_number(double x);

}  // namespace kinetic
