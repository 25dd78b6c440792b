use qmf_core::{MarginalSet, TwoChannelTensor};

/// A corrupted input together with the marginals it must reproduce.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: TwoChannelTensor,
    pub targets: MarginalSet,
}

/// Random-access training set.
pub trait TrainingData {
    fn num_qubits(&self) -> usize;
    fn len(&self) -> usize;
    fn input(&self, i: usize) -> &TwoChannelTensor;
    fn targets(&self, i: usize) -> &MarginalSet;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Content hash recorded in checkpoints, when known.
    fn digest(&self) -> Option<String> {
        None
    }
}

impl TrainingData for [Example] {
    fn num_qubits(&self) -> usize {
        self.first().map_or(0, |e| e.targets.num_qubits())
    }

    fn len(&self) -> usize {
        <[Example]>::len(self)
    }

    fn input(&self, i: usize) -> &TwoChannelTensor {
        &self[i].input
    }

    fn targets(&self, i: usize) -> &MarginalSet {
        &self[i].targets
    }
}

impl TrainingData for Vec<Example> {
    fn num_qubits(&self) -> usize {
        self.as_slice().num_qubits()
    }

    fn len(&self) -> usize {
        Vec::len(self)
    }

    fn input(&self, i: usize) -> &TwoChannelTensor {
        &self[i].input
    }

    fn targets(&self, i: usize) -> &MarginalSet {
        &self[i].targets
    }
}
