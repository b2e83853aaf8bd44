use thiserror::Error;

use crate::graphs::BlockId;
use crate::lang::{LangError, StmtId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("unknown block B{0}")]
    UnknownBlock(BlockId),
    #[error("unknown statement {0}")]
    UnknownStmt(StmtId),
    #[error("statement {0} is not an output instruction")]
    NotAnOutput(StmtId),
    #[error("criterion statement {0} lies outside the slicing region")]
    CriterionOutsideRegion(StmtId),
}
