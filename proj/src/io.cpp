#include "tenrank/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tenrank {

namespace {

using nlohmann::json;

json parse_stream(std::istream& in) {
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

Vec parse_vector(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw ParseError(std::string(what) + " must be a non-empty array");
    }
    Vec v(static_cast<long>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw ParseError(std::string(what) + " entries must be numbers");
        }
        v[static_cast<long>(i)] = j[i].get<double>();
        if (!std::isfinite(v[static_cast<long>(i)])) {
            throw ParseError(std::string(what) + " entries must be finite");
        }
    }
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write file: " + path);
    }
    return out;
}

} // namespace

DenseTensor read_tensor_json(std::istream& in) {
    const json j = parse_stream(in);
    if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
        throw ParseError("tensor file must be {\"shape\":[n1,n2,n3],\"data\":[...]}");
    }
    const json& js = j["shape"];
    if (!js.is_array() || js.size() != 3 || !js[0].is_number_integer() ||
        !js[1].is_number_integer() || !js[2].is_number_integer()) {
        throw ParseError("shape must be three integers");
    }
    const int n1 = js[0].get<int>(), n2 = js[1].get<int>(), n3 = js[2].get<int>();
    if (n1 < 1 || n2 < 1 || n3 < 1) {
        throw ParseError("shape dimensions must be positive");
    }
    Shape shape(n1, n2, n3);
    const json& jd = j["data"];
    if (!jd.is_array() || jd.size() != shape.size()) {
        std::ostringstream msg;
        msg << "data length " << jd.size() << " does not match shape size "
            << shape.size();
        throw ParseError(msg.str());
    }
    std::vector<double> coeffs(shape.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (!jd[i].is_number()) {
            throw ParseError("data entries must be numbers");
        }
        coeffs[i] = jd[i].get<double>();
        if (!std::isfinite(coeffs[i])) {
            throw ParseError("data entries must be finite");
        }
    }
    return DenseTensor(shape, std::move(coeffs));
}

DenseTensor read_tensor_file(const std::string& path) {
    auto in = open_input(path);
    return read_tensor_json(in);
}

void write_tensor_json(std::ostream& out, const DenseTensor& t) {
    json j;
    j["shape"] = {t.shape().n1, t.shape().n2, t.shape().n3};
    j["data"] = t.coeffs();
    out << j.dump(2) << "\n";
}

void write_tensor_file(const std::string& path, const DenseTensor& t) {
    auto out = open_output(path);
    write_tensor_json(out, t);
}

Rank2Candidate read_candidate_json(std::istream& in) {
    const json j = parse_stream(in);
    if (!j.is_object() || !j.contains("first") || !j.contains("second")) {
        throw ParseError("candidate file must be {\"first\":[[..],[..],[..]],"
                         "\"second\":[[..],[..],[..]]}");
    }
    Rank2Candidate c;
    for (const char* key : {"first", "second"}) {
        const json& jt = j[key];
        if (!jt.is_array() || jt.size() != 3) {
            throw ParseError("candidate term must have three factor vectors");
        }
        for (int m = 0; m < 3; ++m) {
            Vec v = parse_vector(jt[m], "candidate factor");
            if (std::string(key) == "first") {
                c.first[m] = std::move(v);
            } else {
                if (v.size() != c.first[m].size()) {
                    throw ParseError("candidate factor lengths disagree between terms");
                }
                c.second[m] = std::move(v);
            }
        }
    }
    return c;
}

Rank2Candidate read_candidate_file(const std::string& path) {
    auto in = open_input(path);
    return read_candidate_json(in);
}

void write_candidate_json(std::ostream& out, const Rank2Candidate& c) {
    json j;
    for (const char* key : {"first", "second"}) {
        json terms = json::array();
        const auto& triple = std::string(key) == "first" ? c.first : c.second;
        for (int m = 0; m < 3; ++m) {
            json factor = json::array();
            for (long i = 0; i < triple[m].size(); ++i) factor.push_back(triple[m][i]);
            terms.push_back(factor);
        }
        j[key] = terms;
    }
    out << j.dump(2) << "\n";
}

void write_candidate_file(const std::string& path, const Rank2Candidate& c) {
    auto out = open_output(path);
    write_candidate_json(out, c);
}

void write_trace_csv(std::ostream& out, const AlsTrace& trace) {
    out << "iteration,error,factor_norm_max,delta_candidate,proj_residual\n";
    out.precision(17);
    for (const auto& row : trace.rows) {
        out << row.iteration << ',' << row.error << ',' << row.factor_norm_max
            << ',' << row.delta_candidate << ',' << row.proj_residual << '\n';
    }
}

void write_trace_file(const std::string& path, const AlsTrace& trace) {
    auto out = open_output(path);
    write_trace_csv(out, trace);
}

} // namespace tenrank
