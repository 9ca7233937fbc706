#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mhr/state.hpp"

namespace mhr {

// ---- Event catalog ----------------------------------------------------------
//
// One struct per machine event. Guards are listed in evaluation order in the
// implementation; a failed guard leaves the state untouched and reports its
// label. Events whose actions a record-space owner performs (uploading,
// deleting, re-marking records, all provider-list and nominee-list changes)
// additionally carry the control guard `grd_ctrl`: with an authorised
// representative present, the owner is locked out and only the representative
// may act.

struct RegisterConsumer {         // grd1: person free, grd2: not an operator, grd3: space free
    Id person;
    Id space;
};
struct OptOut {                   // grd1: consumer registered; cascades over the whole space
    Id consumer;
};
struct UploadRecord {             // grd1: owner registered, grd_ctrl, grd2: record fresh
    ActorRef actor;
    Id owner;
    Id record;
    RecordCategory category;      // General or Restricted
};
struct DeleteRecord {             // grd1: ownership, grd_ctrl
    ActorRef actor;
    Id owner;
    Id record;
};
struct RestrictRecord {           // grd1: ownership, grd_ctrl, grd2: not hidden
    ActorRef actor;
    Id owner;
    Id record;
};
struct GeneralRecord {            // grd1: ownership, grd_ctrl, grd2: not hidden
    ActorRef actor;
    Id owner;
    Id record;
};
struct HideRecord {               // grd1: ownership, grd_ctrl, grd2: not already hidden
    ActorRef actor;
    Id owner;
    Id record;
};
struct UnhideRecord {             // grd1: operator, grd2: record hidden; restores to general
    Id operator_person;
    Id record;
};
struct ViewRecord {               // grd1: record exists, grd2: actor may view; no actions
    ActorRef actor;
    Id record;
};
struct RegisterServiceProvider {  // grd1: provider free
    Id provider;
};
struct AssignProvider {           // grd1: owner, grd_ctrl, grd2: sp registered, grd3: not linked
    ActorRef actor;
    Id owner;
    Id provider;
};
struct GrantGeneralSp {           // grd1: owner, grd_ctrl, grd2: sp has space access, grd3: not already general
    ActorRef actor;
    Id owner;
    Id provider;
};
struct GrantRestrictedSp {        // grd1: owner, grd_ctrl, grd2: sp has space access, grd3: not already restricted
    ActorRef actor;
    Id owner;
    Id provider;
};
struct RevokeAccessSp {           // grd1_r1: owner, grd_ctrl, grd2_r1: linked, grd3_r1: not already revoked
    ActorRef actor;
    Id owner;
    Id provider;
};
struct UploadGeneralRecordSp {    // grd1: owner registered, grd2: sp in general list, grd3: record fresh
    Id provider;
    Id owner;
    Id record;
};
struct UploadRestrictedRecordSp { // grd1: owner registered, grd2: sp in restricted list, grd3: record fresh
    Id provider;
    Id owner;
    Id record;
};
struct AddNominatedGeneral {      // grd1: owner, grd_ctrl, grd2: no self-nomination, grd3: nominee is a
    ActorRef actor;               // consumer, grd4..grd6: not already in any nominee list
    Id owner;
    Id nominee;
};
struct AddNominatedRestricted {   // guards as AddNominatedGeneral
    ActorRef actor;
    Id owner;
    Id nominee;
};
struct GrantFullAccessNominated { // grd1_r2: no self-nomination, grd2_r2: owner, grd_n: nominee is a
    ActorRef actor;               // consumer, grd_ctrl, grd3_r2..grd5_r2: not already in any nominee list
    Id owner;
    Id nominee;
};
struct RemoveNominated {          // grd1: owner, grd_ctrl, grd2: nominee in some list
    ActorRef actor;
    Id owner;
    Id nominee;
};
struct UploadGeneralRecordNominated {    // grd1: owner registered, grd2: full access, grd3: record fresh
    Id nominee;
    Id owner;
    Id record;
};
struct UploadRestrictedRecordNominated { // guards as the general variant
    Id nominee;
    Id owner;
    Id record;
};
struct AssignAuthorisedRep {      // grd1: operator, grd2: owner, grd3: rep is a consumer,
    Id operator_person;           // grd4: no self-representation, grd5: not already assigned
    Id representative;
    Id owner;
};
struct RemoveAuthorisedRep {      // grd1: operator, grd2: owner, grd3: currently assigned
    Id operator_person;
    Id representative;
    Id owner;
};

using Event = std::variant<
    RegisterConsumer, OptOut, UploadRecord, DeleteRecord, RestrictRecord, GeneralRecord,
    HideRecord, UnhideRecord, ViewRecord, RegisterServiceProvider, AssignProvider, GrantGeneralSp,
    GrantRestrictedSp, RevokeAccessSp, UploadGeneralRecordSp, UploadRestrictedRecordSp,
    AddNominatedGeneral, AddNominatedRestricted, GrantFullAccessNominated, RemoveNominated,
    UploadGeneralRecordNominated, UploadRestrictedRecordNominated, AssignAuthorisedRep,
    RemoveAuthorisedRep>;

// A non-enabled event, reified: which guard of which event failed, and why.
struct GuardError {
    std::string event;
    std::string guard;
    std::string detail;

    friend bool operator==(const GuardError&, const GuardError&) = default;
};

struct ApplyResult {
    SystemState state;
    std::optional<GuardError> rejection;

    bool applied() const { return !rejection.has_value(); }
};

// Deliberately broken kernel variants for exercising the checker. Each drops
// one action or guard; the checker must find the resulting invariant breach.
enum class Mutant : std::uint8_t {
    None,
    DropRevokeAccessCut,      // revoke_access_sp keeps the provider's general access pairs
    DropSelfNominationGuard,  // grant_full_access_to_nominated accepts the owner as nominee
    DropRestrictCategoryMove, // restrict_record leaves the record in general_records too
    DropHideAccessCleanup,    // hide_record keeps stale access pairs
    DropOptOutCascade,        // opt_out removes only consumer, space and mapping
    DropUploadFreshGuard,     // upload_record accepts an already-active record
};

std::string_view to_string(Mutant m);
std::optional<Mutant> mutant_from_string(std::string_view name);
std::span<const Mutant> all_mutants();

// Control guard shared by every owner-control event: the owner may act only
// while their space has no authorised representative; an authorised
// representative of that space may always act.
bool actor_controls(const SystemState& s, const ActorRef& actor, Id owner);

struct GuardFail {
    const char* label = nullptr;
    const char* phrase = nullptr;

    explicit operator bool() const { return label != nullptr; }
};

// First failing guard in the documented order, or an empty result when the
// event is enabled. Never allocates; identifiers must be within the universe.
GuardFail first_failing_guard(const SystemState& s, const Event& e, Mutant mutant = Mutant::None);

// Machine step: all guards hold -> successor state with all actions applied
// against the pre-state; any guard fails -> input state returned unchanged
// together with the failing guard. Throws UnknownIdError for identifiers
// outside the universe (this is API misuse, not a disabled event).
ApplyResult apply_event(const SystemState& s, const Event& e, Mutant mutant = Mutant::None);

std::string_view event_name(const Event& e);
// Argument tokens in trace-file order (actor first where present).
std::vector<std::string> event_args(const Event& e, const Universe& u);
// One trace-file line: "<event_name> <arg> <arg> ...".
std::string event_line(const Event& e, const Universe& u);
// Canonical order: event name, then parameter identifiers.
bool event_less(const Event& a, const Event& b);
bool is_owner_control_event(const Event& e);

// ---- Traces -----------------------------------------------------------------

struct TraceStep {
    Event event;
    std::optional<GuardError> rejection;
};

struct Trace {
    SystemState initial;
    std::vector<TraceStep> steps;
};

class ReplayDivergence : public std::runtime_error {
public:
    explicit ReplayDivergence(const std::string& what) : std::runtime_error(what) {}
};

// Folds apply over the recorded steps; throws ReplayDivergence as soon as an
// outcome differs from the recording.
SystemState replay(const Trace& t, Mutant mutant = Mutant::None);

} // namespace mhr
