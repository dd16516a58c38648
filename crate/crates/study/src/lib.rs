//! The forged-documents study protocol.
//!
//! * [`config`]: conditions, stimuli, questionnaires and payment.
//! * [`itembank`]: seeded default stimuli.
//! * [`session`]: the per-participant state machine and its event log entries.
//! * [`scoring`]: prediction, understanding and satisfaction scores, and the
//!   export record with the reassignment rule.
//! * [`view`]: the client-safe view of a session.
//! * [`log`]: JSONL persistence and replay.
//! * [`export`]: the results CSV.
//! * [`simulate`]: synthetic bot participants.

pub mod clock;
pub mod config;
pub mod error;
pub mod export;
pub mod itembank;
pub mod log;
pub mod scoring;
pub mod session;
pub mod simulate;
pub mod view;

pub use config::{Cents, Condition, ConditionWeights, Payment, Quiz, QuizQuestion, Stimulus, StimulusItem, StudyConfig};
pub use error::{FieldError, Result, StudyError};
pub use itembank::{generate_item_bank, ItemBank};
pub use scoring::{
    effective_condition, finalize, score_predictions, score_satisfaction, score_understanding, SessionRecord,
};
pub use session::{assign_condition, Answer, ClientEvent, LogEntry, Phase, SessionEvent, Stage, StudySession, Submission};
pub use view::{view, StagePayload, StateView};
