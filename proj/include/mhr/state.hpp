#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mhr/relations.hpp"

namespace mhr {

// Thrown when an identifier does not belong to the universe (or refers to an
// entity the queried operation requires to exist). Distinct from a guard
// failure, which is ordinary data.
class UnknownIdError : public std::runtime_error {
public:
    explicit UnknownIdError(const std::string& what) : std::runtime_error(what) {}
};

// Fixed carrier sets of one machine instance. People are split into ordinary
// slots (tokens p1..pN) and operator slots (tokens op1..opK); both live in the
// Person namespace and together form the people universe.
class Universe {
public:
    Universe(std::uint32_t people, std::uint32_t operators, std::uint32_t spaces,
             std::uint32_t records, std::uint32_t providers);

    std::uint32_t people_count() const { return people_; }
    std::uint32_t operator_count() const { return operators_; }
    std::uint32_t total_people() const { return people_ + operators_; }
    std::uint32_t space_count() const { return spaces_; }
    std::uint32_t record_count() const { return records_; }
    std::uint32_t provider_count() const { return providers_; }

    Id person(std::uint32_t i) const;    // 0 <= i < total_people()
    Id space(std::uint32_t i) const;
    Id record(std::uint32_t i) const;
    Id provider(std::uint32_t i) const;

    IdSet people() const;           // ordinary people and operator slots
    IdSet operator_people() const;  // the operator slots only
    IdSet spaces() const;
    IdSet records() const;
    IdSet providers() const;

    bool contains(Id id) const;
    bool contains_kind(Id id, IdKind kind) const { return id.kind() == kind && contains(id); }

    // Symbolic token for an identifier: p1, op1, m1, r1, sp1.
    std::string token(Id id) const;
    std::optional<Id> parse_token(std::string_view token) const;

    friend bool operator==(const Universe&, const Universe&) = default;

private:
    std::uint32_t people_, operators_, spaces_, records_, providers_;
};

enum class RecordCategory : std::uint8_t { General, Restricted, Hidden };
enum class ProviderListKind : std::uint8_t { General, Restricted, Revoked };
enum class NomineeListKind : std::uint8_t { General, Restricted, FullAccess };

std::string_view to_string(RecordCategory c);

// Who is asking. Nominee and authorised-representative roles are resolved
// from state, not carried here; operators are people that can never be
// consumers.
struct ActorRef {
    enum class Kind : std::uint8_t { Consumer, Provider, Operator };

    Kind kind;
    Id id;

    static ActorRef consumer(Id person) { return {Kind::Consumer, person}; }
    static ActorRef provider(Id sp) { return {Kind::Provider, sp}; }
    static ActorRef operator_(Id person) { return {Kind::Operator, person}; }

    friend constexpr auto operator<=>(const ActorRef&, const ActorRef&) = default;
};

// Every variable of the machine, flattened into one value. Transitions copy
// and mutate; a constructed state is treated as immutable.
struct SystemState {
    explicit SystemState(Universe u) : universe(u) {}

    Universe universe;

    IdSet consumers;                    // subset of people
    IdSet system_operators;             // subset of people, disjoint from consumers
    IdSet mhr_db;                       // active record spaces
    Relation my_hr;                     // consumer |-> space, bijection
    IdSet records;                      // active records
    Relation records_mhr;               // record |-> space, total function
    Relation consumer_own_records;      // record |-> consumer, total function
    IdSet general_records;              // category partition of records
    IdSet restricted_records;
    IdSet hidden_records;
    IdSet service_providers;            // registered providers
    Relation consumer_sp;               // consumer |-> provider
    Relation sp_mhr_access;             // provider |-> space (derived)
    Relation general_sp_list;           // provider |-> space, partition of sp_mhr_access
    Relation restricted_sp_list;
    Relation revoked_sp_list;
    Relation general_sp_access;         // provider |-> record (derived)
    Relation restricted_sp_access;      // provider |-> record (derived)
    Relation general_nominated;         // consumer |-> space
    Relation restricted_nominated;      // consumer |-> space
    Relation full_access_nominated;     // consumer |-> space
    Relation general_nominated_access;  // consumer |-> record (derived)
    Relation restricted_nominated_access; // consumer |-> record (derived)
    Relation authorised_rep;            // consumer |-> space

    friend bool operator==(const SystemState&, const SystemState&) = default;

    // Space owned by consumer c; requires c to be registered.
    Id owned_space(Id c) const;
    // Active records sitting in space m.
    IdSet records_of_space(Id m) const;
    std::optional<ProviderListKind> provider_list(Id sp, Id m) const;
    std::optional<NomineeListKind> nominee_list(Id n, Id m) const;
};

enum class InvariantId : std::uint8_t {
    INV1, INV2, INV3, INV4, INV5, INV6, INV7, INV8, INV9, INV10,
    INV11, INV12, INV13, INV14, INV15, INV16, INV17, INV18,
};

inline constexpr std::size_t kInvariantCount = 18;

std::string_view to_string(InvariantId id);
std::optional<InvariantId> invariant_from_string(std::string_view name);

struct InvariantViolation {
    InvariantId id;
    std::string witness;

    friend bool operator==(const InvariantViolation&, const InvariantViolation&) = default;
};

// State with every field empty except system_operators. The operator set must
// lie within the people universe.
SystemState initial_state(const Universe& u, const IdSet& operators);

// Evaluates INV-1..INV-18 in order, no short circuit; violations are data.
std::vector<InvariantViolation> check_invariants(const SystemState& s);

// Recomputes the five derived access relations from their defining
// expressions. Acts as the independent oracle for the kernel's incremental
// maintenance: on a consistent state this is the identity.
SystemState recompute_derived(const SystemState& s);

// Pure access query, the union of all access rules. Throws UnknownIdError if
// the record is not an active record of the machine.
bool can_view(const SystemState& s, const ActorRef& actor, Id record);

// Canonical binary serialization (universe header plus every field with
// length-prefixed sorted elements). Injective on states, so byte equality is
// state equality.
std::vector<std::uint8_t> to_bytes(const SystemState& s);
SystemState from_bytes(std::span<const std::uint8_t> bytes);

// FNV-1a over to_bytes; canonical, stable across runs and platforms.
std::uint64_t hash_state(const SystemState& s);

// Canonical JSON: one key per field, arrays sorted by identifier order, pairs
// as two-element arrays of tokens. Byte-identical across runs for equal
// states.
std::string to_canonical_json(const SystemState& s, int indent = -1);

} // namespace mhr
