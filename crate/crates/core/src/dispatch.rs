//! Pattern envelopes around the app logic.
//!
//! * Classic: the app contract is called directly and holds its own storage.
//! * Proxy (UUPS): a proxy holds the storage and delegates every call to the
//!   implementation whose address sits in the EIP-1967 implementation slot.
//! * Diamond: a diamond holds the storage and a selector table mapping each
//!   selector to a packed `(facet address, position)` word; calls are
//!   delegated to the facet owning the selector.
//!
//! Deployments and upgrades are applied to a [`World`], which prices every
//! transaction they need. [`deploy_gas`] prices a plan on its own by
//! replaying it on a scratch world in the state the plan expects.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::app::{self, AppParams, AppVersion, CallRequest, Function, Selector};
use crate::error::PlanError;
use crate::gas::{Gas, GasSchedule};
use crate::storage::{keccak256, ContractStorage};
use crate::trace::{OpTrace, Outcome, ReturnValue, Tx};
use crate::word::{Address, ContractId, SlotKey, Word};

pub const UNKNOWN_SELECTOR: &str = "unknown-selector";

/// `keccak256("eip1967.proxy.implementation") - 1`.
pub const IMPLEMENTATION_SLOT: [u8; 32] = [
    0x36, 0x08, 0x94, 0xa1, 0x3b, 0xa1, 0xa3, 0x21, 0x06, 0x67, 0xc8, 0x28, 0x49, 0x2d, 0xb9, 0x8d, 0xca, 0x3e, 0x20,
    0x76, 0xcc, 0x37, 0x35, 0xa9, 0x20, 0xa3, 0xca, 0x50, 0x5d, 0x38, 0x2b, 0xbc,
];

pub fn implementation_slot() -> SlotKey {
    SlotKey(Word(IMPLEMENTATION_SLOT))
}

/// Base slot of the namespaced diamond storage struct.
pub fn diamond_storage_base() -> SlotKey {
    SlotKey(Word(keccak256(b"diamond.standard.diamond.storage")))
}

/// Selector table: `mapping(bytes4 => bytes32)` at the diamond storage base.
pub fn selector_table_slot() -> SlotKey {
    diamond_storage_base()
}

pub fn diamond_owner_slot() -> SlotKey {
    diamond_storage_base().offset(3)
}

pub fn initializable_slot() -> SlotKey {
    SlotKey(Word(keccak256(b"openzeppelin.storage.Initializable")).wrapping_sub_u64(1))
}

pub fn ownable_slot() -> SlotKey {
    SlotKey(Word(keccak256(b"openzeppelin.storage.Ownable")).wrapping_sub_u64(1))
}

const UPGRADE_SIGNATURE: &str = "upgradeToAndCall(address,bytes)";

/// Selectors the diamond registers for its own cut and loupe facets.
pub const CUT_SIGNATURES: [&str; 1] = ["diamondCut((address,uint8,bytes4[])[],address,bytes)"];
pub const LOUPE_SIGNATURES: [&str; 4] =
    ["facets()", "facetFunctionSelectors(address)", "facetAddresses()", "facetAddress(bytes4)"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Classic,
    Proxy,
    Diamond,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Classic, Pattern::Proxy, Pattern::Diamond];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Classic => "classic",
            Pattern::Proxy => "proxy",
            Pattern::Diamond => "diamond",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classic" => Ok(Pattern::Classic),
            "proxy" | "uups" => Ok(Pattern::Proxy),
            "diamond" => Ok(Pattern::Diamond),
            _ => Err(format!("unknown pattern `{s}` (expected classic, proxy or diamond)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractRole {
    Classic,
    Proxy,
    Implementation,
    Diamond,
    CutFacet,
    LoupeFacet,
    NotarizationFacet,
}

impl ContractRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ContractRole::Classic => "classic",
            ContractRole::Proxy => "proxy",
            ContractRole::Implementation => "implementation",
            ContractRole::Diamond => "diamond",
            ContractRole::CutFacet => "cut-facet",
            ContractRole::LoupeFacet => "loupe-facet",
            ContractRole::NotarizationFacet => "notarization-facet",
        }
    }
}

impl fmt::Display for ContractRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitValue {
    Word(Word),
    /// Address of a contract deployed by the same plan.
    AddressOf(ContractRole),
    /// The deploying account.
    Deployer,
    /// Selector-table entry pointing at a contract of the same plan.
    FacetEntry(ContractRole),
}

/// A storage write performed by a constructor. Keyed writes go through a
/// mapping at `base`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitWrite {
    pub base: SlotKey,
    pub key: Option<Vec<u8>>,
    pub value: InitValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub role: ContractRole,
    pub deployed_size: u64,
    pub initcode_size: u64,
    pub initcode_nonzero_fraction: f64,
    pub constructor: Vec<InitWrite>,
}

impl ContractSpec {
    pub fn initcode_nonzero_bytes(&self) -> u64 {
        ((self.initcode_size as f64) * self.initcode_nonzero_fraction).round() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutAction {
    Add,
    Replace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorCut {
    pub selector: Selector,
    pub facet: ContractRole,
    pub action: CutAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub pattern: Pattern,
    pub version: AppVersion,
    pub contracts: Vec<ContractSpec>,
    pub cut: Vec<SelectorCut>,
    pub pointer_update: bool,
}

impl DeploymentPlan {
    pub fn cut_operations(&self) -> usize {
        self.cut.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty() && self.cut.is_empty() && !self.pointer_update
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSize {
    pub pattern: Pattern,
    pub version: AppVersion,
    pub contract: ContractRole,
    pub deployed_size: u64,
    pub initcode_size: u64,
}

/// Bytecode sizes per `(pattern, version, contract)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSizeTable {
    pub initcode_nonzero_fraction: f64,
    pub entries: Vec<CodeSize>,
}

impl CodeSizeTable {
    /// Uncalibrated sizes whose ratios encode the relative contract sizes.
    pub fn reference() -> Self {
        use AppVersion::*;
        use ContractRole::{CutFacet, Implementation, LoupeFacet, NotarizationFacet};
        use Pattern::{Classic, Diamond, Proxy};
        let rows: [(Pattern, AppVersion, ContractRole, u64); 13] = [
            (Classic, V1, ContractRole::Classic, 1_800),
            (Classic, V2, ContractRole::Classic, 2_250),
            (Classic, V3, ContractRole::Classic, 2_900),
            (Proxy, V1, Implementation, 4_000),
            (Proxy, V1, ContractRole::Proxy, 480),
            (Proxy, V2, Implementation, 5_200),
            (Proxy, V3, Implementation, 6_800),
            (Diamond, V1, CutFacet, 2_700),
            (Diamond, V1, LoupeFacet, 2_450),
            (Diamond, V1, ContractRole::Diamond, 4_500),
            (Diamond, V1, NotarizationFacet, 2_000),
            (Diamond, V2, NotarizationFacet, 2_450),
            (Diamond, V3, NotarizationFacet, 3_150),
        ];
        CodeSizeTable {
            initcode_nonzero_fraction: 0.85,
            entries: rows
                .into_iter()
                .map(|(pattern, version, contract, deployed)| CodeSize {
                    pattern,
                    version,
                    contract,
                    deployed_size: deployed,
                    initcode_size: deployed + deployed / 16 + 32,
                })
                .collect(),
        }
    }

    pub fn get(&self, pattern: Pattern, version: AppVersion, role: ContractRole) -> Option<&CodeSize> {
        self.entries.iter().find(|e| e.pattern == pattern && e.version == version && e.contract == role)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.initcode_nonzero_fraction) {
            problems.push(format!(
                "code_sizes.initcode_nonzero_fraction {} outside [0, 1]",
                self.initcode_nonzero_fraction
            ));
        }
        for e in &self.entries {
            if e.deployed_size > e.initcode_size {
                problems.push(format!(
                    "code_sizes {}/{}/{}: deployed_size {} exceeds initcode_size {}",
                    e.pattern, e.version, e.contract, e.deployed_size, e.initcode_size
                ));
            }
        }
        for pattern in Pattern::ALL {
            for version in AppVersion::ALL {
                for role in contract_roles(pattern, version) {
                    if self.get(pattern, version, *role).is_none() {
                        problems.push(format!("code_sizes: missing entry {pattern}/{version}/{role}"));
                    }
                }
            }
        }
        problems
    }
}

/// Contracts deployed by each plan, in deployment order.
pub fn contract_roles(pattern: Pattern, version: AppVersion) -> &'static [ContractRole] {
    use ContractRole::*;
    match (pattern, version) {
        (Pattern::Classic, _) => &[Classic],
        (Pattern::Proxy, AppVersion::V1) => &[Implementation, Proxy],
        (Pattern::Proxy, _) => &[Implementation],
        (Pattern::Diamond, AppVersion::V1) => &[CutFacet, LoupeFacet, Diamond, NotarizationFacet],
        (Pattern::Diamond, _) => &[NotarizationFacet],
    }
}

fn constructor_for(role: ContractRole) -> Vec<InitWrite> {
    match role {
        ContractRole::Proxy => vec![
            InitWrite {
                base: implementation_slot(),
                key: None,
                value: InitValue::AddressOf(ContractRole::Implementation),
            },
            InitWrite { base: initializable_slot(), key: None, value: InitValue::Word(Word::from_u64(1)) },
            InitWrite { base: ownable_slot(), key: None, value: InitValue::Deployer },
        ],
        ContractRole::Implementation => {
            vec![InitWrite { base: initializable_slot(), key: None, value: InitValue::Word(Word::from_u64(u64::MAX)) }]
        }
        ContractRole::Diamond => {
            let mut writes = vec![InitWrite { base: diamond_owner_slot(), key: None, value: InitValue::Deployer }];
            let own = CUT_SIGNATURES
                .iter()
                .map(|s| (s, ContractRole::CutFacet))
                .chain(LOUPE_SIGNATURES.iter().map(|s| (s, ContractRole::LoupeFacet)));
            for (signature, facet) in own {
                writes.push(InitWrite {
                    base: selector_table_slot(),
                    key: Some(app::function_selector(signature).0.to_vec()),
                    value: InitValue::FacetEntry(facet),
                });
            }
            writes
        }
        _ => Vec::new(),
    }
}

fn spec_for(
    pattern: Pattern,
    version: AppVersion,
    role: ContractRole,
    sizes: &CodeSizeTable,
) -> Result<ContractSpec, PlanError> {
    let size = sizes.get(pattern, version, role).ok_or_else(|| PlanError::MissingSize {
        pattern,
        version,
        role: role.to_string(),
    })?;
    if size.deployed_size > size.initcode_size {
        return Err(PlanError::InconsistentSize {
            role: role.to_string(),
            deployed: size.deployed_size,
            initcode: size.initcode_size,
        });
    }
    Ok(ContractSpec {
        role,
        deployed_size: size.deployed_size,
        initcode_size: size.initcode_size,
        initcode_nonzero_fraction: sizes.initcode_nonzero_fraction,
        constructor: constructor_for(role),
    })
}

fn build_plan(pattern: Pattern, version: AppVersion, sizes: &CodeSizeTable) -> Result<DeploymentPlan, PlanError> {
    let contracts = contract_roles(pattern, version)
        .iter()
        .map(|role| spec_for(pattern, version, *role, sizes))
        .collect::<Result<Vec<_>, _>>()?;
    let cut = if pattern == Pattern::Diamond {
        let previous = match version {
            AppVersion::V1 => &[][..],
            AppVersion::V2 => AppVersion::V1.functions(),
            AppVersion::V3 => AppVersion::V2.functions(),
        };
        version
            .functions()
            .iter()
            .map(|f| SelectorCut {
                selector: f.selector(),
                facet: ContractRole::NotarizationFacet,
                action: if previous.contains(f) { CutAction::Replace } else { CutAction::Add },
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(DeploymentPlan {
        pattern,
        version,
        contracts,
        cut,
        pointer_update: pattern == Pattern::Proxy && version != AppVersion::V1,
    })
}

/// The initial (V1) deployment of a pattern.
pub fn initial_plan(pattern: Pattern, sizes: &CodeSizeTable) -> Result<DeploymentPlan, PlanError> {
    build_plan(pattern, AppVersion::V1, sizes)
}

/// Contracts, cut operations and pointer update needed to move `pattern` from `from` to `to`.
pub fn upgrade_plan(
    pattern: Pattern,
    from: AppVersion,
    to: AppVersion,
    sizes: &CodeSizeTable,
) -> Result<DeploymentPlan, PlanError> {
    if from.next() != Some(to) {
        return Err(PlanError::InvalidTransition { pattern, from, to });
    }
    build_plan(pattern, to, sizes)
}

/// The plan that brings `pattern` to `version`: the initial deployment for
/// V1, the upgrade from the previous version otherwise.
pub fn plan_for(pattern: Pattern, version: AppVersion, sizes: &CodeSizeTable) -> Result<DeploymentPlan, PlanError> {
    build_plan(pattern, version, sizes)
}

/// Addresses and routing of the deployed pattern.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DispatchState {
    /// Contract receiving external calls and holding app storage.
    pub entry: Option<ContractId>,
    pub implementation: Option<ContractId>,
    pub selectors: BTreeMap<Selector, ContractId>,
}

/// Packs a facet address and its selector position into one table word.
pub fn facet_entry(facet: ContractId, position: u16) -> Word {
    let mut bytes = [0u8; 32];
    bytes[..20].copy_from_slice(&facet.address().0);
    bytes[30..].copy_from_slice(&position.to_be_bytes());
    Word(bytes)
}

pub fn unpack_facet(entry: Word) -> Option<ContractId> {
    let mut addr = [0u8; 20];
    addr.copy_from_slice(&entry.0[..20]);
    ContractId::from_address(Address(addr))
}

/// Envelope a pattern adds in front of the app logic. `Err` carries the revert reason.
pub fn dispatch_trace(
    pattern: Pattern,
    selector: Selector,
    state: &DispatchState,
    storage: &mut ContractStorage,
    tx: &mut Tx<'_>,
) -> Result<(), String> {
    match pattern {
        Pattern::Classic => Ok(()),
        Pattern::Proxy => {
            let word = tx.sload(storage, implementation_slot());
            let target = ContractId::from_address(word.to_address())
                .or(state.implementation)
                .ok_or_else(|| "no-implementation".to_string())?;
            tx.delegate_call(target);
            Ok(())
        }
        Pattern::Diamond => {
            let slot = tx.mapping_slot(selector_table_slot(), &selector.0);
            let entry = tx.sload(storage, slot);
            tx.compute(2);
            let facet = if entry.is_zero() { None } else { unpack_facet(entry) };
            let facet = facet.ok_or_else(|| UNKNOWN_SELECTOR.to_string())?;
            tx.delegate_call(facet);
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeployedContract {
    pub role: ContractRole,
    pub version: AppVersion,
    pub deployed_size: u64,
}

/// A simulated chain running one pattern of the app.
#[derive(Clone, Debug)]
pub struct World {
    pattern: Pattern,
    version: Option<AppVersion>,
    schedule: GasSchedule,
    params: AppParams,
    deployer: Address,
    next_id: u64,
    contracts: BTreeMap<ContractId, DeployedContract>,
    storages: BTreeMap<ContractId, ContractStorage>,
    dispatch: DispatchState,
}

impl World {
    pub fn new(pattern: Pattern, schedule: GasSchedule, params: AppParams) -> Self {
        World {
            pattern,
            version: None,
            schedule,
            params,
            deployer: app::DEFAULT_CALLER,
            next_id: 1,
            contracts: BTreeMap::new(),
            storages: BTreeMap::new(),
            dispatch: DispatchState::default(),
        }
    }

    pub fn pattern(&self) -> Pattern {
        self.pattern
    }

    pub fn version(&self) -> Option<AppVersion> {
        self.version
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn dispatch(&self) -> &DispatchState {
        &self.dispatch
    }

    pub fn contracts(&self) -> &BTreeMap<ContractId, DeployedContract> {
        &self.contracts
    }

    /// Storage of the contract receiving external calls.
    pub fn app_storage(&self) -> Option<&ContractStorage> {
        self.dispatch.entry.and_then(|id| self.storages.get(&id))
    }

    /// Deploys and upgrades through `version`, starting from an empty chain.
    pub fn deployed(
        pattern: Pattern,
        version: AppVersion,
        schedule: GasSchedule,
        params: AppParams,
        sizes: &CodeSizeTable,
    ) -> Result<Self, PlanError> {
        let mut world = World::new(pattern, schedule, params);
        for v in AppVersion::ALL.into_iter().take_while(|v| *v <= version) {
            world.apply(&plan_for(pattern, v, sizes)?)?;
        }
        Ok(world)
    }

    /// Executes a deployment or upgrade plan, returning one trace per transaction.
    pub fn apply(&mut self, plan: &DeploymentPlan) -> Result<Vec<OpTrace>, PlanError> {
        let expected = match self.version {
            None => Some(AppVersion::V1),
            Some(v) => v.next(),
        };
        if plan.pattern != self.pattern || expected != Some(plan.version) {
            return Err(PlanError::InvalidTransition {
                pattern: plan.pattern,
                from: self.version.unwrap_or(AppVersion::V1),
                to: plan.version,
            });
        }

        let mut traces = Vec::new();
        let mut ids: BTreeMap<ContractRole, ContractId> = BTreeMap::new();
        for spec in &plan.contracts {
            let id = ContractId(self.next_id);
            self.next_id += 1;
            ids.insert(spec.role, id);
            traces.push(self.deploy_contract(id, spec, plan.version, &ids));
        }

        match self.pattern {
            Pattern::Classic => {
                self.dispatch.entry = ids.get(&ContractRole::Classic).copied();
            }
            Pattern::Proxy => {
                let implementation = ids[&ContractRole::Implementation];
                if let Some(proxy) = ids.get(&ContractRole::Proxy) {
                    self.dispatch.entry = Some(*proxy);
                }
                if plan.pointer_update {
                    traces.push(self.update_pointer(implementation));
                }
                self.dispatch.implementation = Some(implementation);
            }
            Pattern::Diamond => {
                if let Some(diamond) = ids.get(&ContractRole::Diamond) {
                    self.dispatch.entry = Some(*diamond);
                    for (selector, facet) in self.own_selectors(&ids) {
                        self.dispatch.selectors.insert(selector, facet);
                    }
                }
                if !plan.cut.is_empty() {
                    traces.push(self.diamond_cut(&plan.cut, &ids));
                }
            }
        }
        self.version = Some(plan.version);
        Ok(traces)
    }

    fn own_selectors(&self, ids: &BTreeMap<ContractRole, ContractId>) -> Vec<(Selector, ContractId)> {
        CUT_SIGNATURES
            .iter()
            .map(|s| (app::function_selector(s), ids[&ContractRole::CutFacet]))
            .chain(LOUPE_SIGNATURES.iter().map(|s| (app::function_selector(s), ids[&ContractRole::LoupeFacet])))
            .collect()
    }

    fn resolve(&self, value: &InitValue, ids: &BTreeMap<ContractRole, ContractId>, position: u16) -> Word {
        match value {
            InitValue::Word(w) => *w,
            InitValue::AddressOf(role) => {
                Word::from_address(ids.get(role).map(ContractId::address).unwrap_or(Address::ZERO))
            }
            InitValue::Deployer => Word::from_address(self.deployer),
            InitValue::FacetEntry(role) => ids.get(role).map(|id| facet_entry(*id, position)).unwrap_or_default(),
        }
    }

    fn deploy_contract(
        &mut self,
        id: ContractId,
        spec: &ContractSpec,
        version: AppVersion,
        ids: &BTreeMap<ContractRole, ContractId>,
    ) -> OpTrace {
        let schedule = self.schedule.clone();
        let mut storage = ContractStorage::new(id);
        storage.snapshot_tx();
        let mut tx = Tx::new(&schedule);
        tx.intrinsic(true);
        tx.calldata_counts(spec.initcode_size, spec.initcode_nonzero_bytes());
        let mut position = 0u16;
        for write in &spec.constructor {
            let slot = match &write.key {
                Some(key) => tx.mapping_slot(write.base, key),
                None => write.base,
            };
            let value = self.resolve(&write.value, ids, position);
            if matches!(write.value, InitValue::FacetEntry(_)) {
                position += 1;
            }
            tx.sstore(&mut storage, slot, value);
        }
        tx.code_deposit(spec.deployed_size);
        self.storages.insert(id, storage);
        self.contracts.insert(id, DeployedContract { role: spec.role, version, deployed_size: spec.deployed_size });
        tx.finish(Outcome::Ok(ReturnValue::Unit))
    }

    fn entry_storage(&mut self) -> &mut ContractStorage {
        let entry = self.dispatch.entry.expect("pattern deployed");
        self.storages.get_mut(&entry).expect("entry storage exists")
    }

    fn update_pointer(&mut self, implementation: ContractId) -> OpTrace {
        let schedule = self.schedule.clone();
        let mut payload = app::function_selector(UPGRADE_SIGNATURE).0.to_vec();
        payload.extend_from_slice(Word::from_address(implementation.address()).as_bytes());
        payload.extend_from_slice(Word::from_u64(64).as_bytes());
        payload.extend_from_slice(Word::ZERO.as_bytes());
        let storage = self.entry_storage();
        storage.snapshot_tx();
        let mut tx = Tx::new(&schedule);
        tx.intrinsic(false);
        tx.calldata(&payload);
        tx.sstore(storage, implementation_slot(), Word::from_address(implementation.address()));
        tx.finish(Outcome::Ok(ReturnValue::Unit))
    }

    fn diamond_cut(&mut self, cut: &[SelectorCut], ids: &BTreeMap<ContractRole, ContractId>) -> OpTrace {
        let schedule = self.schedule.clone();
        let mut next_position = self.dispatch.selectors.len() as u16;
        let mut routed = Vec::new();
        let storage = self.entry_storage();
        storage.snapshot_tx();
        let mut tx = Tx::new(&schedule);
        tx.intrinsic(false);
        for op in cut {
            let facet = ids[&op.facet];
            let slot = tx.mapping_slot(selector_table_slot(), &op.selector.0);
            let existing = storage.get(slot);
            let position = if existing.is_zero() {
                next_position += 1;
                next_position - 1
            } else {
                u16::from_be_bytes([existing.0[30], existing.0[31]])
            };
            tx.sstore(storage, slot, facet_entry(facet, position));
            routed.push((op.selector, facet));
        }
        self.dispatch.selectors.extend(routed);
        tx.finish(Outcome::Ok(ReturnValue::Unit))
    }

    /// Runs one external call as its own transaction.
    pub fn call(&mut self, call: &CallRequest) -> OpTrace {
        let schedule = self.schedule.clone();
        let params = self.params.clone();
        let pattern = self.pattern;
        let version = self.version.expect("pattern deployed");
        let dispatch = self.dispatch.clone();
        let storage = self.entry_storage();
        storage.snapshot_tx();
        let mut tx = Tx::new(&schedule);
        tx.intrinsic(false);
        tx.calldata(&call.calldata());
        let outcome = match dispatch_trace(pattern, call.function.selector(), &dispatch, storage, &mut tx) {
            Ok(()) => app::run(version, call, storage, &mut tx, &params),
            Err(reason) => Outcome::Reverted(reason),
        };
        if !outcome.is_ok() {
            storage.revert_tx();
        }
        tx.finish(outcome)
    }

    /// Every app function of the active version routes to a facet.
    pub fn selector_table_is_total(&self) -> bool {
        match (self.pattern, self.version) {
            (Pattern::Diamond, Some(v)) => v.functions().iter().all(|f| {
                self.dispatch.selectors.get(&f.selector()).is_some_and(|facet| self.contracts.contains_key(facet))
            }),
            _ => true,
        }
    }
}

/// Total charged gas and trace of one external call.
pub fn external_call_gas(world: &mut World, call: &CallRequest) -> (Gas, OpTrace) {
    let trace = world.call(call);
    (trace.total, trace)
}

/// Gas to execute `plan`, priced on a scratch chain in the state the plan expects.
pub fn deploy_gas(plan: &DeploymentPlan, schedule: &GasSchedule) -> Result<Gas, PlanError> {
    Ok(deploy_traces(plan, schedule)?.iter().map(|t| t.total).sum())
}

pub fn deploy_traces(plan: &DeploymentPlan, schedule: &GasSchedule) -> Result<Vec<OpTrace>, PlanError> {
    if plan.is_empty() {
        return Ok(Vec::new());
    }
    let zero_sizes = CodeSizeTable {
        initcode_nonzero_fraction: 0.0,
        entries: Pattern::ALL
            .into_iter()
            .flat_map(|p| {
                AppVersion::ALL.into_iter().flat_map(move |v| {
                    contract_roles(p, v).iter().map(move |r| CodeSize {
                        pattern: p,
                        version: v,
                        contract: *r,
                        deployed_size: 0,
                        initcode_size: 0,
                    })
                })
            })
            .collect(),
    };
    let mut world = World::new(plan.pattern, schedule.clone(), AppParams::default());
    for v in AppVersion::ALL.into_iter().take_while(|v| *v < plan.version) {
        world.apply(&plan_for(plan.pattern, v, &zero_sizes)?)?;
    }
    world.apply(plan)
}

/// Functions routed by the diamond after `version`'s cut.
pub fn app_selectors(version: AppVersion) -> Vec<(Function, Selector)> {
    version.functions().iter().map(|f| (*f, f.selector())).collect()
}
