#pragma once

#include "qdss/warehouse.hpp"

#include <cstdint>
#include <vector>

namespace qdss::seed {

// Identifiers of the three historical quakes in the built-in dataset.
inline constexpr const char* kAcehQuake = "Q-2004-ACEH";
inline constexpr const char* kSichuanQuake = "Q-2008-SICHUAN";
inline constexpr const char* kTangshanQuake = "Q-1976-TANGSHAN";

inline constexpr std::int64_t kAcehDeathsTotal = 230000;
inline constexpr std::int64_t kAcehDeathsIndonesia = 168000;
inline constexpr std::int64_t kSichuanDeaths = 40000;

struct Dataset {
  std::vector<Province> provinces;
  std::vector<Regency> regencies;
  std::vector<Station> stations;
  std::vector<Person> people;
  std::vector<Medic> medics;
  std::vector<QuakeEvent> quakes;
  std::vector<CasualtyRecord> casualties;
  std::vector<BuildingDamage> damage;
};

/// Provinces, regencies, stations and a small medic roster.
Dataset reference_dimensions();

/// Aceh 2004, Sichuan 2008 and Tangshan 1976 with their recorded deaths.
Dataset paper_quakes();

/// `count` deterministic synthetic quakes over the Indonesian reference
/// regencies, each with casualty and damage facts.
Dataset synthetic_facts(std::size_t count, std::uint64_t seed);

/// Inserts every row whose id is not already present.
void load(Writer& writer, const Dataset& data);

}  // namespace qdss::seed
