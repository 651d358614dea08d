#include "p2pcbir/workload.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p2pcbir/error.hpp"

namespace p2pcbir {

std::vector<std::string> WorkloadParams::violations() const {
    std::vector<std::string> out;
    if (!(n_peers > 0)) out.emplace_back("n_peers must be positive");
    if (!(query_rate > 0)) out.emplace_back("queries_per_peer_per_day must be positive");
    if (!(items_per_peer > 0)) out.emplace_back("items_per_peer must be positive");
    if (!(flop_per_compare > 0)) out.emplace_back("flop_per_compare must be positive");
    if (!(message_bytes > 0)) out.emplace_back("message_bytes must be positive");
    return out;
}

void WorkloadParams::validate() const {
    const auto problems = violations();
    if (!problems.empty()) throw Error("invalid workload: " + problems.front());
}

WorkloadParams plickr_default() { return WorkloadParams{}; }

DerivedRates derive_rates(const WorkloadParams& p) {
    DerivedRates d;
    d.total_query_rate = p.n_peers * p.query_rate;
    d.query_byte_rate = p.message_bytes * p.n_peers * p.query_rate;
    d.total_items = p.n_peers * p.items_per_peer;
    return d;
}

WorkloadParams workload_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("workload: ") + e.what());
    }
    if (!j.is_object()) throw Error("workload: expected a JSON object");

    WorkloadParams p = plickr_default();
    auto read = [&](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw Error(std::string("workload: ") + key + " must be a number");
        field = j[key].get<double>();
    };
    double per_day = p.queries_per_day();
    read("n_peers", p.n_peers);
    read("queries_per_peer_per_day", per_day);
    read("items_per_peer", p.items_per_peer);
    read("flop_per_compare", p.flop_per_compare);
    read("message_bytes", p.message_bytes);
    p.query_rate = per_day / kSecondsPerDay;
    return p;
}

WorkloadParams load_workload(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return workload_from_json(buf.str());
}

std::string workload_to_json(const WorkloadParams& p) {
    nlohmann::json j = {
        {"n_peers", p.n_peers},
        {"queries_per_peer_per_day", p.queries_per_day()},
        {"items_per_peer", p.items_per_peer},
        {"flop_per_compare", p.flop_per_compare},
        {"message_bytes", p.message_bytes},
    };
    return j.dump(2);
}

}  // namespace p2pcbir
