#include "kinetic/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "kinetic/errors.hpp"

namespace kinetic {

namespace fs = std::filesystem;

Verdict Verdict::interval(std::string id, std::string role, double predicted, double tolerance, double measured,
                          bool exploratory) {
    Verdict v;
    v.id = std::move(id);
    v.role = std::move(role);
    v.predicted = predicted;
    v.tolerance = tolerance;
    v.measured = measured;
    v.pass = std::isfinite(measured) && std::abs(measured - predicted) <= tolerance;
    v.exploratory = exploratory;
    return v;
}

Verdict Verdict::at_most(std::string id, std::string role, double bound, double measured, bool exploratory) {
    Verdict v;
    v.id = std::move(id);
    v.role = std::move(role);
    v.predicate = true;
    v.measured = measured;
    v.tolerance = bound;
    v.pass = std::isfinite(measured) && measured <= bound;
    v.exploratory = exploratory;
    v.note = "bound " + format_number(bound);
    return v;
}

Verdict Verdict::holds(std::string id, std::string role, bool ok, double measured, bool exploratory) {
    Verdict v;
    v.id = std::move(id);
    v.role = std::move(role);
    v.predicate = true;
    v.measured = measured;
    v.pass = ok;
    v.exploratory = exploratory;
    return v;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

void Table::add(std::vector<double> row) {
    if (row.size() != columns.size()) throw PreconditionError("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
}

std::string Table::csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
        os << '\n';
    }
    return os.str();
}

bool Report::passed(bool strict) const {
    for (const auto& v : verdicts)
        if (!v.pass && (strict || !v.exploratory)) return false;
    return true;
}

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json Report::to_json() const {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["experiment"] = experiment;
    j["params"] = params;
    Json vs = Json::array();
    for (const auto& v : verdicts) {
        Json e;
        e["id"] = v.id;
        e["role"] = v.role;
        e["kind"] = v.predicate ? "predicate" : "interval";
        e["predicted"] = v.predicate ? Json(nullptr) : number_or_null(v.predicted);
        e["measured"] = number_or_null(v.measured);
        e["tolerance"] = v.predicate && v.note.empty() ? Json(nullptr) : number_or_null(v.tolerance);
        e["pass"] = v.pass;
        e["exploratory"] = v.exploratory;
        if (!v.note.empty()) e["note"] = v.note;
        vs.push_back(std::move(e));
    }
    j["verdicts"] = std::move(vs);
    j["results"] = results;
    Json tabs = Json::array();
    for (const auto& t : tables) tabs.push_back(t.name + ".csv");
    j["tables"] = std::move(tabs);
    return j;
}

std::string Report::summary(bool strict) const {
    std::ostringstream os;
    int gating = 0, failed = 0;
    for (const auto& v : verdicts) {
        bool gate = strict || !v.exploratory;
        gating += gate;
        failed += gate && !v.pass;
        os << (v.pass ? "PASS " : "FAIL ") << (v.exploratory ? "(exploratory) " : "") << v.id << ": measured "
           << format_number(v.measured);
        if (!v.predicate) os << " predicted " << format_number(v.predicted) << " +/- " << format_number(v.tolerance);
        else if (!v.note.empty()) os << " (" << v.note << ")";
        os << "  [" << v.role << "]\n";
    }
    os << experiment << ": " << (gating - failed) << "/" << gating << " gating checks passed\n";
    return os.str();
}

Report merge_reports(const std::string& experiment, const std::vector<Report>& parts) {
    Report out;
    out.experiment = experiment;
    for (const auto& p : parts) {
        out.params[p.experiment] = p.params;
        out.results[p.experiment] = p.results;
        for (auto v : p.verdicts) {
            v.id = p.experiment + "." + v.id;
            out.verdicts.push_back(std::move(v));
        }
        for (const auto& t : p.tables) out.tables.push_back(t);
    }
    return out;
}

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + p.string(), "out");
    os << text;
}

}  // namespace

void write_report(const std::string& dir, const Report& r, bool strict) {
    fs::create_directories(dir);
    write_file(fs::path(dir) / (r.experiment + ".json"), r.to_json().dump(2) + "\n");
    write_file(fs::path(dir) / (r.experiment + "_summary.txt"), r.summary(strict));
    for (const auto& t : r.tables) write_file(fs::path(dir) / (t.name + ".csv"), t.csv());
}

void write_metadata(const std::string& dir, const std::string& experiment, const Json& info) {
    fs::create_directories(dir);
    write_file(fs::path(dir) / (experiment + "_metadata.json"), info.dump(2) + "\n");
}

std::vector<std::string> report_diff(const Json& a, const Json& b) {
    int va = a.value("schema_version", -1), vb = b.value("schema_version", -1);
    if (va != vb)
        throw PreconditionError("report_diff: schema version " + std::to_string(va) + " vs " + std::to_string(vb));
    std::map<std::string, Json> ma, mb;
    for (const auto& v : a.at("verdicts")) ma[v.at("id").get<std::string>()] = v;
    for (const auto& v : b.at("verdicts")) mb[v.at("id").get<std::string>()] = v;
    std::vector<std::string> out;
    for (const auto& [id, v] : ma) {
        auto it = mb.find(id);
        if (it == mb.end()) {
            out.push_back(id + ": only in first report");
            continue;
        }
        for (const auto& [key, val] : v.items()) {
            const Json other = it->second.contains(key) ? it->second.at(key) : Json(nullptr);
            if (val != other) out.push_back(id + "." + key + ": " + val.dump() + " -> " + other.dump());
        }
        for (const auto& [key, val] : it->second.items())
            if (!v.contains(key)) out.push_back(id + "." + key + ": null -> " + val.dump());
    }
    for (const auto& [id, v] : mb)
        if (!ma.count(id)) out.push_back(id + ": only in second report");
    return out;
}

}  // namespace kinetic
