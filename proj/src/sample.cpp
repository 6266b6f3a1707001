#include "enrt/sample.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace enrt {

namespace {

std::string trim(const std::string& s) {
    auto b = s.begin();
    auto e = s.end();
    while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
    return std::string(b, e);
}

// Minimal CSV field splitter: handles quoted fields with doubled quotes and
// trailing \r from CRLF files.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void fail_row(int row, const std::string& what) {
    throw std::runtime_error("row " + std::to_string(row) + ": " + what);
}

double parse_double(const std::string& raw, int row, const std::string& field) {
    const std::string s = trim(raw);
    if (s.empty()) fail_row(row, "empty value in column '" + field + "'");
    double value = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end)
        fail_row(row, "cannot parse '" + s + "' in column '" + field + "' as a number");
    return value;
}

}  // namespace

Eigen::VectorXd EgocentricSample::ego_treatments() const {
    Eigen::VectorXd z(n_e());
    for (int i = 0; i < n_e(); ++i) {
        const auto& u = units[ego_units[i]];
        if (!u.treatment) throw std::logic_error("ego '" + u.unit_id + "' has no treatment assigned");
        z[i] = *u.treatment;
    }
    return z;
}

Eigen::VectorXd EgocentricSample::ego_outcomes() const {
    Eigen::VectorXd y(n_e());
    for (int i = 0; i < n_e(); ++i) y[i] = units[ego_units[i]].outcome;
    return y;
}

Eigen::VectorXd EgocentricSample::alter_outcomes() const {
    Eigen::VectorXd y(n_a());
    for (int i = 0; i < n_a(); ++i) y[i] = units[alter_units[i]].outcome;
    return y;
}

Eigen::MatrixXd EgocentricSample::ego_covariates() const {
    Eigen::MatrixXd x(n_e(), covariates.cols());
    for (int i = 0; i < n_e(); ++i) x.row(i) = covariates.row(ego_units[i]);
    return x;
}

Eigen::MatrixXd EgocentricSample::alter_covariates() const {
    Eigen::MatrixXd x(n_a(), covariates.cols());
    for (int i = 0; i < n_a(); ++i) x.row(i) = covariates.row(alter_units[i]);
    return x;
}

EgocentricSample build_sample(std::vector<Unit> units, Eigen::MatrixXd covariates,
                              std::vector<std::string> covariate_names, double p_z) {
    EgocentricSample s;
    s.units = std::move(units);
    s.covariates = std::move(covariates);
    s.covariate_names = std::move(covariate_names);
    s.p_z = p_z;

    if (s.covariates.rows() != static_cast<Eigen::Index>(s.units.size()))
        throw std::invalid_argument("covariate row count does not match unit count");

    std::unordered_map<std::string, int> ego_index;
    for (std::size_t u = 0; u < s.units.size(); ++u) {
        if (s.units[u].role == Role::Ego) {
            ego_index.emplace(s.units[u].unit_id, static_cast<int>(s.ego_units.size()));
            s.ego_units.push_back(static_cast<int>(u));
        } else {
            s.alter_units.push_back(static_cast<int>(u));
        }
    }
    s.ego_alters.assign(s.ego_units.size(), {});
    s.alter_ego.resize(s.alter_units.size());
    for (std::size_t a = 0; a < s.alter_units.size(); ++a) {
        const Unit& unit = s.units[s.alter_units[a]];
        const auto it = ego_index.find(unit.ego_id);
        if (it == ego_index.end())
            throw std::invalid_argument("alter '" + unit.unit_id + "' references unknown ego '" +
                                        unit.ego_id + "'");
        s.alter_ego[a] = it->second;
        s.ego_alters[it->second].push_back(static_cast<int>(a));
    }

    const auto violations = validate_sample(s);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "invalid sample (" << violations.size() << " violation(s)):";
        for (const auto& v : violations) msg << " [row " << v.row << ", " << v.field << "] " << v.message << ";";
        throw std::invalid_argument(msg.str());
    }
    return s;
}

EgocentricSample load_sample(const std::string& path, const SchemaOptions& schema, double p_z) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) throw std::runtime_error("'" + path + "' is empty");
    const auto header = split_csv_line(header_line);

    auto column = [&](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int col_id = column(schema.unit_id);
    const int col_role = column(schema.role);
    const int col_ego = column(schema.ego_id);
    const int col_z = column(schema.z);
    const int col_y = column(schema.y);
    for (const auto& [name, col] :
         {std::pair{schema.unit_id, col_id}, {schema.role, col_role}, {schema.ego_id, col_ego},
          {schema.z, col_z}, {schema.y, col_y}}) {
        if (col < 0) throw std::runtime_error("missing required column '" + name + "'");
    }

    std::vector<int> cov_cols;
    std::vector<std::string> cov_names;
    if (schema.covariate_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c].rfind("x_", 0) == 0) {
                cov_cols.push_back(static_cast<int>(c));
                cov_names.push_back(header[c]);
            }
        }
    } else {
        for (const auto& name : schema.covariate_columns) {
            const int c = column(name);
            if (c < 0) throw std::runtime_error("missing covariate column '" + name + "'");
            cov_cols.push_back(c);
            cov_names.push_back(name);
        }
    }

    std::vector<Unit> units;
    std::vector<double> cov_values;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int row = 1;  // header is row 1
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            fail_row(row, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));

        Unit u;
        u.source_row = row;
        u.unit_id = trim(fields[col_id]);
        if (u.unit_id.empty()) fail_row(row, "empty unit_id");
        if (!seen_ids.insert(u.unit_id).second) fail_row(row, "duplicate unit_id '" + u.unit_id + "'");

        const std::string role = trim(fields[col_role]);
        if (role == "ego") {
            u.role = Role::Ego;
        } else if (role == "alter") {
            u.role = Role::Alter;
        } else {
            fail_row(row, "role must be 'ego' or 'alter', got '" + role + "'");
        }

        u.ego_id = trim(fields[col_ego]);
        if (u.role == Role::Ego && u.ego_id.empty()) u.ego_id = u.unit_id;

        const std::string z_raw = trim(fields[col_z]);
        if (u.role == Role::Ego) {
            if (z_raw.empty()) fail_row(row, "ego without treatment value");
            const double z = parse_double(z_raw, row, schema.z);
            if (z != 0.0 && z != 1.0) fail_row(row, "non-binary treatment '" + z_raw + "'");
            u.treatment = static_cast<int>(z);
        } else if (!z_raw.empty()) {
            fail_row(row, "alter carries treatment");
        }

        u.outcome = parse_double(fields[col_y], row, schema.y);
        for (std::size_t c = 0; c < cov_cols.size(); ++c)
            cov_values.push_back(parse_double(fields[cov_cols[c]], row, cov_names[c]));
        units.push_back(std::move(u));
    }

    Eigen::MatrixXd covariates(units.size(), cov_cols.size());
    for (std::size_t r = 0; r < units.size(); ++r)
        for (std::size_t c = 0; c < cov_cols.size(); ++c)
            covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                cov_values[r * cov_cols.size() + c];

    try {
        return build_sample(std::move(units), std::move(covariates), std::move(cov_names), p_z);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("'" + path + "': " + e.what());
    }
}

EgocentricSample load_sample(const std::string& path, double p_z) {
    return load_sample(path, SchemaOptions{}, p_z);
}

std::vector<Violation> validate_sample(const EgocentricSample& s) {
    std::vector<Violation> out;
    auto flag = [&](int row, std::string field, std::string message) {
        out.push_back({row, std::move(field), std::move(message)});
    };

    if (s.n_e() < 1) flag(0, "sample", "sample has no egos");
    if (!(s.p_z > 0.0 && s.p_z < 1.0)) flag(0, "p_z", "treatment probability must lie in (0,1)");
    if (s.covariates.rows() != static_cast<Eigen::Index>(s.units.size()))
        flag(0, "covariates", "covariate rows do not match unit count");
    if (static_cast<std::size_t>(s.n_e() + s.n_a()) != s.units.size())
        flag(0, "sample", "ego + alter count does not match unit count");

    std::unordered_map<std::string, const Unit*> ego_by_id;
    std::unordered_set<std::string> ids;
    for (const auto& u : s.units) {
        if (!ids.insert(u.unit_id).second)
            flag(u.source_row, "unit_id", "duplicate unit_id '" + u.unit_id + "'");
        if (u.role == Role::Ego) ego_by_id.emplace(u.unit_id, &u);
    }
    for (const auto& u : s.units) {
        if (u.role == Role::Ego) {
            if (!u.treatment)
                flag(u.source_row, "z", "ego '" + u.unit_id + "' has no treatment");
            else if (*u.treatment != 0 && *u.treatment != 1)
                flag(u.source_row, "z", "non-binary treatment for '" + u.unit_id + "'");
        } else {
            if (u.treatment) flag(u.source_row, "z", "alter '" + u.unit_id + "' carries treatment");
            if (ego_by_id.find(u.ego_id) == ego_by_id.end())
                flag(u.source_row, "ego_id",
                     "alter '" + u.unit_id + "' references missing ego '" + u.ego_id + "'");
        }
    }
    return out;
}

ObservedExposures observed_exposures(const EgocentricSample& s) {
    const Eigen::VectorXd z = s.ego_treatments();  // throws on missing treatment
    ObservedExposures e;
    e.alter.resize(s.n_a());
    for (int a = 0; a < s.n_a(); ++a) e.alter[a] = z[s.alter_ego[a]];
    return e;
}

}  // namespace enrt
