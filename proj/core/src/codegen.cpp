#include "catdse/codegen.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"

namespace catdse {

using nlohmann::json;

namespace {

std::string kname(Count id) { return "k" + std::to_string(id); }
std::string pname(Count id) { return "p" + std::to_string(id); }

}  // namespace

std::string plan_hash(const EdpuPlan& plan) {
    const std::string text = to_json(plan).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

GraphDescription emit_graph(const EdpuPlan& plan, const PlatformProfile& p) {
    (void)p;
    GraphDescription g;
    g.metadata.plan_hash = plan_hash(plan);
    Count plio_id = 0;
    for (const auto& inst : plan.instances) {
        const PuSpec* spec = plan.spec(inst.kind);
        if (!spec) {
            throw GenerationError("PU instance " + inst.id + " references unknown PuSpec " +
                                  std::string(to_string(inst.kind)));
        }
        const Count base = static_cast<Count>(g.kernels.size());
        for (Count i = 0; i < spec->core_count; ++i) {
            const BlockCoord c = core_coord(*spec, i);
            g.kernels.push_back({base + i, inst.id, {c.m, c.k, c.n}});
        }
        g.metadata.expected_kernels += spec->core_count;

        for (const auto& route : route_plios(*spec)) {
            Plio plio{plio_id++, route.direction, inst.id, {}};
            for (const auto& packet : route.packets) {
                std::vector<Count> ids;
                for (Count local : packet) ids.push_back(base + local);
                std::sort(ids.begin(), ids.end());
                plio.packet_group.push_back(std::move(ids));
            }
            g.plios.push_back(std::move(plio));
        }
        const auto& first_plio = g.plios.end() - static_cast<std::ptrdiff_t>(route_plios(*spec).size());
        for (auto it = first_plio; it != g.plios.end(); ++it) {
            if (it->direction != PlioDirection::In) continue;
            for (const auto& packet : it->packet_group) {
                for (Count k : packet) g.connections.push_back({pname(it->id), kname(k)});
            }
        }
        // k-cascade inside each output chain, the last core drains to its Out PLIO.
        for (auto it = first_plio; it != g.plios.end(); ++it) {
            if (it->direction != PlioDirection::Out) continue;
            for (const auto& chain : it->packet_group) {
                std::vector<Count> ordered = chain;
                std::sort(ordered.begin(), ordered.end(), [&](Count a, Count b) {
                    return g.kernels[a].tile_coord[1] < g.kernels[b].tile_coord[1];
                });
                for (std::size_t i = 1; i < ordered.size(); ++i) {
                    g.connections.push_back({kname(ordered[i - 1]), kname(ordered[i])});
                }
                g.connections.push_back({kname(ordered.back()), pname(it->id)});
            }
        }
    }
    return g;
}

GraphValidation validate_graph(const GraphDescription& g, const PlatformProfile& p) {
    GraphValidation v;
    auto fail = [&](std::string msg) {
        v.ok = false;
        v.violations.push_back(std::move(msg));
    };
    const Count plio_aie = derive_plio_aie(p);
    std::set<Count> kernel_ids;
    for (const auto& k : g.kernels) {
        if (!kernel_ids.insert(k.id).second) fail("duplicate kernel " + kname(k.id));
    }
    std::set<Count> plio_ids;
    std::map<Count, Count> in_refs, out_refs;
    for (const auto& pl : g.plios) {
        if (!plio_ids.insert(pl.id).second) fail("duplicate plio " + pname(pl.id));
        const Count size = static_cast<Count>(pl.packet_group.size());
        if (size > plio_aie) {
            fail("plio " + pname(pl.id) + " packet group has " + std::to_string(size) +
                 " packets, PLIO_AIE limit is " + std::to_string(plio_aie));
        }
        std::set<Count> members;
        for (const auto& packet : pl.packet_group) {
            for (Count k : packet) {
                if (!kernel_ids.count(k)) fail("plio " + pname(pl.id) + " references unknown kernel " + kname(k));
                members.insert(k);
            }
        }
        for (Count k : members) ++(pl.direction == PlioDirection::In ? in_refs : out_refs)[k];
    }
    for (const auto& k : g.kernels) {
        if (in_refs[k.id] < 1) fail("kernel " + kname(k.id) + " is in no In packet group");
        if (out_refs[k.id] != 1) {
            fail("kernel " + kname(k.id) + " is in " + std::to_string(out_refs[k.id]) +
                 " Out packet groups (expected 1)");
        }
    }
    const Count kernels = static_cast<Count>(g.kernels.size());
    if (kernels != g.metadata.expected_kernels) {
        fail("kernel count " + std::to_string(kernels) + " != allocated cores " +
             std::to_string(g.metadata.expected_kernels));
    }
    if (kernels > p.total_aie) {
        fail("kernel count " + std::to_string(kernels) + " exceeds total_aie " + std::to_string(p.total_aie));
    }
    auto known = [&](const std::string& node) {
        if (node.size() < 2) return false;
        Count id = 0;
        try {
            id = std::stoll(node.substr(1));
        } catch (const std::exception&) {
            return false;
        }
        return node[0] == 'k' ? kernel_ids.count(id) > 0 : node[0] == 'p' && plio_ids.count(id) > 0;
    };
    for (const auto& c : g.connections) {
        if (!known(c.source) || !known(c.sink)) fail("connection " + c.source + " -> " + c.sink + " has an unknown end");
    }
    return v;
}

json to_json(const GraphDescription& g) {
    json kernels = json::array();
    for (const auto& k : g.kernels) {
        kernels.push_back({{"id", k.id}, {"pu_instance", k.pu_instance}, {"tile_coord", k.tile_coord}});
    }
    json plios = json::array();
    for (const auto& pl : g.plios) {
        plios.push_back({{"id", pl.id},
                         {"direction", pl.direction == PlioDirection::In ? "In" : "Out"},
                         {"pu_instance", pl.pu_instance},
                         {"packet_group", pl.packet_group}});
    }
    json conns = json::array();
    for (const auto& c : g.connections) conns.push_back({c.source, c.sink});
    return {{"graph_version", kGraphVersion},
            {"metadata",
             {{"plan_hash", g.metadata.plan_hash},
              {"generator_version", g.metadata.generator_version},
              {"expected_kernels", g.metadata.expected_kernels}}},
            {"kernels", kernels},
            {"plios", plios},
            {"connections", conns}};
}

GraphDescription graph_from_json(const json& doc) {
    try {
        if (doc.at("graph_version").get<int>() != kGraphVersion) {
            throw ArtifactError("unsupported graph_version");
        }
        GraphDescription g;
        const auto& m = doc.at("metadata");
        g.metadata = {m.at("plan_hash").get<std::string>(), m.at("generator_version").get<std::string>(),
                      m.at("expected_kernels").get<Count>()};
        for (const auto& k : doc.at("kernels")) {
            g.kernels.push_back({k.at("id").get<Count>(), k.at("pu_instance").get<std::string>(),
                                 k.at("tile_coord").get<std::array<Count, 3>>()});
        }
        for (const auto& pl : doc.at("plios")) {
            const auto dir = pl.at("direction").get<std::string>();
            if (dir != "In" && dir != "Out") throw ArtifactError("unknown plio direction '" + dir + "'");
            g.plios.push_back({pl.at("id").get<Count>(), dir == "In" ? PlioDirection::In : PlioDirection::Out,
                               pl.at("pu_instance").get<std::string>(),
                               pl.at("packet_group").get<std::vector<std::vector<Count>>>()});
        }
        for (const auto& c : doc.at("connections")) {
            g.connections.push_back({c.at(0).get<std::string>(), c.at(1).get<std::string>()});
        }
        return g;
    } catch (const json::exception& e) {
        throw ArtifactError(std::string("malformed graph: ") + e.what());
    }
}

std::string to_text(const GraphDescription& g) {
    std::ostringstream os;
    os << "# graph_version " << kGraphVersion << " plan_hash " << g.metadata.plan_hash << " generator "
       << g.metadata.generator_version << '\n';
    for (const auto& k : g.kernels) {
        os << "kernel " << kname(k.id) << " pu=" << k.pu_instance << " at=(" << k.tile_coord[0] << ','
           << k.tile_coord[1] << ',' << k.tile_coord[2] << ")\n";
    }
    for (const auto& pl : g.plios) {
        os << "plio " << (pl.direction == PlioDirection::In ? "in" : "out") << ' ' << pname(pl.id) << " group=[";
        for (std::size_t i = 0; i < pl.packet_group.size(); ++i) {
            if (i) os << ',';
            os << '[';
            for (std::size_t j = 0; j < pl.packet_group[i].size(); ++j) {
                if (j) os << ',';
                os << kname(pl.packet_group[i][j]);
            }
            os << ']';
        }
        os << "]\n";
    }
    for (const auto& c : g.connections) os << "connect " << c.source << " -> " << c.sink << '\n';
    return os.str();
}

}  // namespace catdse
