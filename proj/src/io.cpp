#include "dhinf/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dhinf/errors.hpp"

namespace dhinf::io {

namespace {

using json = nlohmann::json;

json parse_document(const std::string& text) {
    try {
        json doc = json::parse(text);
        if (!doc.is_object()) throw InputError("top-level value must be an object");
        return doc;
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed file: ") + e.what());
    }
}

const json& require(const json& doc, const std::string& field) {
    const auto it = doc.find(field);
    if (it == doc.end()) throw InputError("field '" + field + "': missing");
    return *it;
}

double to_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw InputError("field '" + field + "': expected a number");
    return v.get<double>();
}

Mat to_matrix(const json& v, const std::string& field) {
    if (v.is_number()) return Mat::Constant(1, 1, v.get<double>());
    if (!v.is_array()) throw InputError("field '" + field + "': expected a 2-D array");
    if (v.empty()) return Mat(0, 0);
    const auto rows = static_cast<Eigen::Index>(v.size());
    if (!v[0].is_array()) throw InputError("field '" + field + "': expected a 2-D array (list of rows)");
    const auto cols = static_cast<Eigen::Index>(v[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InputError("field '" + field + "': row " + std::to_string(i) + " has inconsistent length");
        }
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = to_number(row[static_cast<std::size_t>(j)], field);
    }
    return m;
}

json from_matrix(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TimeDelayPlant parse_plant(const std::string& text) {
    const json doc = parse_document(text);
    TimeDelayPlant p;
    const json& n_field = require(doc, "n");
    if (!n_field.is_number_integer() || n_field.get<long>() < 1) throw InputError("field 'n': expected a positive integer");
    const auto n = static_cast<Eigen::Index>(n_field.get<long>());

    const json& delays = require(doc, "state_delays");
    if (!delays.is_array()) throw InputError("field 'state_delays': expected an array");
    for (const auto& d : delays) p.state_delays.push_back(to_number(d, "state_delays"));
    if (doc.contains("input_delay")) p.input_delay = to_number(doc["input_delay"], "input_delay");
    if (doc.contains("feedthrough_delay")) p.feedthrough_delay = to_number(doc["feedthrough_delay"], "feedthrough_delay");

    const json& a = require(doc, "A");
    if (!a.is_array() || a.empty()) throw InputError("field 'A': expected a list of m+1 matrices");
    for (std::size_t i = 0; i < a.size(); ++i) p.A.push_back(to_matrix(a[i], "A[" + std::to_string(i) + "]"));

    p.B1 = to_matrix(require(doc, "B1"), "B1");
    p.B2 = to_matrix(require(doc, "B2"), "B2");
    p.C1 = to_matrix(require(doc, "C1"), "C1");
    p.C2 = to_matrix(require(doc, "C2"), "C2");
    p.D11 = to_matrix(require(doc, "D11"), "D11");
    p.D12 = to_matrix(require(doc, "D12"), "D12");
    p.D21 = to_matrix(require(doc, "D21"), "D21");
    p.D22 = to_matrix(require(doc, "D22"), "D22");

    if (p.A.front().rows() != n) throw InputError("field 'A': A0 has " + std::to_string(p.A.front().rows()) +
                                                  " rows but n = " + std::to_string(n));
    try {
        p.validate();
    } catch (const DimensionError& e) {
        throw InputError(std::string("invalid plant: ") + e.what());
    }
    return p;
}

ControllerRealization parse_controller(const std::string& text) {
    const json doc = parse_document(text);
    const json& nk_field = require(doc, "nK");
    if (!nk_field.is_number_integer() || nk_field.get<long>() < 0) {
        throw InputError("field 'nK': expected a nonnegative integer");
    }
    const auto nk = static_cast<Eigen::Index>(nk_field.get<long>());
    ControllerRealization c;
    c.AK = to_matrix(require(doc, "AK"), "AK");
    c.BK = to_matrix(require(doc, "BK"), "BK");
    c.CK = to_matrix(require(doc, "CK"), "CK");
    if (nk > 0) {
        if (c.AK.rows() != nk || c.AK.cols() != nk) throw InputError("field 'AK': expected nK x nK");
        if (c.BK.rows() != nk) throw InputError("field 'BK': expected nK rows");
        if (c.CK.cols() != nk) throw InputError("field 'CK': expected nK columns");
    } else if (c.AK.size() != 0 || c.BK.size() != 0 || c.CK.size() != 0) {
        throw InputError("field 'nK': order 0 requires empty AK, BK, CK");
    }
    return c;
}

TimeDelayPlant read_plant_file(const std::string& path) { return parse_plant(slurp(path)); }

ControllerRealization read_controller_file(const std::string& path) { return parse_controller(slurp(path)); }

std::string plant_to_json(const TimeDelayPlant& plant) {
    json doc;
    doc["n"] = plant.n();
    doc["state_delays"] = plant.state_delays;
    doc["input_delay"] = plant.input_delay;
    doc["feedthrough_delay"] = plant.feedthrough_delay;
    json a = json::array();
    for (const auto& m : plant.A) a.push_back(from_matrix(m));
    doc["A"] = std::move(a);
    doc["B1"] = from_matrix(plant.B1);
    doc["B2"] = from_matrix(plant.B2);
    doc["C1"] = from_matrix(plant.C1);
    doc["C2"] = from_matrix(plant.C2);
    doc["D11"] = from_matrix(plant.D11);
    doc["D12"] = from_matrix(plant.D12);
    doc["D21"] = from_matrix(plant.D21);
    doc["D22"] = from_matrix(plant.D22);
    return doc.dump(2) + "\n";
}

std::string controller_to_json(const ControllerRealization& controller) {
    json doc;
    doc["nK"] = controller.order();
    doc["AK"] = from_matrix(controller.AK);
    doc["BK"] = from_matrix(controller.BK);
    doc["CK"] = from_matrix(controller.CK);
    return doc.dump(2) + "\n";
}

ControllerRealization fit_to_plant(ControllerRealization controller, const TimeDelayPlant& plant) {
    if (controller.order() == 0) {
        controller.AK = Mat(0, 0);
        controller.BK = Mat(0, plant.ny());
        controller.CK = Mat(plant.nu(), 0);
    }
    return controller;
}

}  // namespace dhinf::io
