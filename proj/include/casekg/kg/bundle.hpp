#pragma once

#include <string>

#include "casekg/kg/dataset.hpp"
#include "casekg/kg/knowledge_graph.hpp"

namespace casekg::kg {

// Everything `ingest` produces: the entity registry, the raw knowledge graph
// and the interaction dataset, all keyed by the same entity ids.
struct Workspace {
    EntityRegistry registry;
    KnowledgeGraph kg;
    DdiDataset dataset;
};

// Little-endian binary container: magic "CKGB", u32 version, then the
// registry, KG relations and triples, and the dataset.
void save_bundle(const Workspace& ws, const std::string& path);
Workspace load_bundle(const std::string& path);

}  // namespace casekg::kg
