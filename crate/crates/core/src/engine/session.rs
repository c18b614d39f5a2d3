use super::{evaluate_acceptance, select_bid, BiddingContext, EngineError, OpponentModel, TacticConfig};
use crate::domain::{AgentState, Bid, BidScore, NegotiationDomain, UtilityModel};
use crate::parser::parse_template;
use crate::template::{StrategyTemplate, TemplateKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Actor {
    A,
    B,
}

impl Actor {
    pub fn other(self) -> Actor {
        match self {
            Actor::A => Actor::B,
            Actor::B => Actor::A,
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Actor::A => "A",
            Actor::B => "B",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "bid", rename_all = "snake_case")]
pub enum Action {
    Offer(Bid),
    Accept,
    Reject,
}

/// One line of the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub round: u32,
    pub t: f64,
    pub actor: Actor,
    #[serde(flatten)]
    pub action: Action,
}

/// A negotiating party: preferences plus its two templates.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub name: String,
    pub utility: UtilityModel,
    pub acceptance: StrategyTemplate,
    pub bidding: StrategyTemplate,
    pub config: TacticConfig,
    /// The opponent's true preferences, when known. Otherwise Pareto
    /// computations use a frequency model of the opponent's bids.
    pub opponent_utility: Option<UtilityModel>,
}

impl AgentSpec {
    pub fn new(
        name: impl Into<String>,
        utility: UtilityModel,
        acceptance: StrategyTemplate,
        bidding: StrategyTemplate,
        config: TacticConfig,
    ) -> Result<Self, EngineError> {
        if acceptance.kind() != TemplateKind::Acceptance {
            return Err(EngineError::WrongKind(acceptance.name().to_string()));
        }
        if bidding.kind() != TemplateKind::Bidding {
            return Err(EngineError::WrongKind(bidding.name().to_string()));
        }
        Ok(AgentSpec {
            name: name.into(),
            utility,
            acceptance,
            bidding,
            config,
            opponent_utility: None,
        })
    }
}

const BOULWARE_ACCEPTANCE: &str =
    "acceptance template \"boulware\" { phase [0, 1] { accept if U(offer) >= U(next_own) } }";
const BOULWARE_BIDDING: &str = "bidding template \"boulware\" { phase [0, 1] { bid boulware } }";

/// Time-dependent Boulware agent that accepts anything at least as good as
/// its own next bid.
pub fn builtin_boulware(utility: UtilityModel, config: TacticConfig) -> AgentSpec {
    AgentSpec::new(
        "boulware",
        utility,
        parse_template(BOULWARE_ACCEPTANCE).expect("builtin template parses"),
        parse_template(BOULWARE_BIDDING).expect("builtin template parses"),
        config,
    )
    .expect("builtin templates have the right kinds")
}

/// Default bidding template: the Boulware tactic throughout.
pub fn default_bidding() -> StrategyTemplate {
    parse_template(BOULWARE_BIDDING).expect("builtin template parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Number of rounds; time is `round / deadline`.
    pub deadline: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub bid: Bid,
    pub round: u32,
    pub t: f64,
    pub accepted_by: Actor,
}

/// The state the accepting side decided in, kept so the decision can be
/// re-checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    pub actor: Actor,
    pub state: AgentState,
    pub offer: Bid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub agreement: Option<Agreement>,
    pub utility_a: f64,
    pub utility_b: f64,
    pub transcript: Vec<TranscriptEntry>,
    pub acceptance: Option<AcceptanceRecord>,
}

impl SessionOutcome {
    /// One JSON object per transcript entry.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.transcript {
            out.push_str(&serde_json::to_string(entry).expect("transcript serializes"));
            out.push('\n');
        }
        out
    }
}

struct Side<'a> {
    spec: &'a AgentSpec,
    /// Offers received from the other side, oldest first.
    received: Vec<Bid>,
}

/// Alternating offers between `a` and `b`; `a` opens. In every round `a`
/// and then `b` respond to the latest offer by accepting it or countering.
/// When `b` refuses in the last round the session ends with a rejection.
pub fn run_session(
    domain: &NegotiationDomain,
    a: &AgentSpec,
    b: &AgentSpec,
    config: SessionConfig,
) -> Result<SessionOutcome, EngineError> {
    if config.deadline == 0 {
        return Err(EngineError::Config("deadline must be at least one round".into()));
    }
    for spec in [a, b] {
        if !spec.utility.fits(domain) {
            return Err(EngineError::Config(format!(
                "utility profile of `{}` does not match the domain",
                spec.name
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sides = [
        Side { spec: a, received: Vec::new() },
        Side { spec: b, received: Vec::new() },
    ];
    let mut transcript = Vec::new();
    let mut pending: Option<Bid> = None;

    for round in 1..=config.deadline {
        let t = round as f64 / config.deadline as f64;
        for actor in [Actor::A, Actor::B] {
            let side = &mut sides[actor as usize];
            let spec = side.spec;
            let mut state = AgentState {
                t,
                own_next_bid: None,
                opponent_history: side.received.clone(),
                dynamic_threshold: spec.config.dynamic_threshold.value_at(t),
            };
            let frequency;
            let opponent: &dyn BidScore = match &spec.opponent_utility {
                Some(truth) => truth,
                None => {
                    frequency = OpponentModel::from_history(domain, &side.received);
                    &frequency
                }
            };
            let ctx = BiddingContext {
                domain,
                own: &spec.utility,
                opponent,
                config: &spec.config,
            };
            let planned = select_bid(&spec.bidding, &state, &ctx, &mut rng)?;
            state.own_next_bid = Some(planned.clone());

            if let Some(offer) = pending.take() {
                if evaluate_acceptance(&spec.acceptance, &state, &offer, &spec.utility, &spec.config)? {
                    transcript.push(TranscriptEntry { round, t, actor, action: Action::Accept });
                    let utility_a = a.utility.utility(&offer)?;
                    let utility_b = b.utility.utility(&offer)?;
                    return Ok(SessionOutcome {
                        agreement: Some(Agreement {
                            bid: offer.clone(),
                            round,
                            t,
                            accepted_by: actor,
                        }),
                        utility_a,
                        utility_b,
                        transcript,
                        acceptance: Some(AcceptanceRecord { actor, state, offer }),
                    });
                }
            }
            if round == config.deadline && actor == Actor::B {
                transcript.push(TranscriptEntry { round, t, actor, action: Action::Reject });
                break;
            }
            transcript.push(TranscriptEntry {
                round,
                t,
                actor,
                action: Action::Offer(planned.clone()),
            });
            sides[actor.other() as usize].received.push(planned.clone());
            pending = Some(planned);
        }
    }
    Ok(SessionOutcome {
        agreement: None,
        utility_a: 0.0,
        utility_b: 0.0,
        transcript,
        acceptance: None,
    })
}
