"""Fixed sample inputs shared by fixtures, golden files, and scripts.

The golden prompt files are generated from these values; editing any text
here requires regenerating tests/golden/.
"""

from jitfeedback.domain import ErrorLabel, FewShotExample, QuizOption, QuizProblem

SAMPLE_ESSAY_TEXT = (
    "I plan to study the block that rides on top, because the question asks about the "
    "force it exerts on its partner below. The pair accelerates together, so I will "
    "multiply the mass of the top block by that shared acceleration, and I will keep "
    "in mind that the contact force on the lower block points against the applied push."
)

SAMPLE_RUBRIC = (
    "An expert isolates the upper block, applies its mass times the shared "
    "acceleration, and reports the reaction on the lower block as pointing against "
    "the applied push, citing the action-reaction pairing between the blocks."
)


def build_sample_quiz() -> QuizProblem:
    return QuizProblem(
        quiz_id="qz-stacked-blocks",
        statement=(
            "Two stacked blocks ride together across a level, frictionless floor while a "
            "steady horizontal push acts on the lower block, and the pair speeds up as one "
            "unit. Which expression gives the force that the upper block exerts on the "
            "lower block while they accelerate together?"
        ),
        options=(
            QuizOption(
                key="A",
                text=(
                    "The mass of the upper block times the acceleration of the pair, "
                    "pointing against the applied push."
                ),
                mapped_label=ErrorLabel.CORRECT,
            ),
            QuizOption(
                key="B",
                text=(
                    "The mass of the upper block times the acceleration of the pair, "
                    "pointing along the applied push."
                ),
                mapped_label=ErrorLabel.DIRECTION,
            ),
            QuizOption(
                key="C",
                text=(
                    "The mass of the lower block times the acceleration of the pair, "
                    "pointing against the applied push."
                ),
                mapped_label=ErrorLabel.POSITION,
            ),
            QuizOption(
                key="D",
                text=(
                    "The combined mass of the two blocks times the acceleration of the "
                    "pair, pointing along the applied push."
                ),
                mapped_label=ErrorLabel.POSITION_DIRECTION,
            ),
        ),
        correct_option="A",
    )


_BANK_SPEC = [
    (
        ErrorLabel.CORRECT,
        "I will isolate the top block, use its mass with the shared acceleration, and "
        "state that the reaction on the bottom block points against the push.",
        "Solid plan. You picked the right object and the right sense for the contact "
        "force; carry both through the computation.",
    ),
    (
        ErrorLabel.CORRECT,
        "Treat the upper block alone. Its mass times the common acceleration gives the "
        "friction from below, and the reaction it applies points backward.",
        "Good reasoning. Keep the object choice and the backward reaction explicit in "
        "your final expression.",
    ),
    (
        ErrorLabel.CORRECT,
        "The pair shares one acceleration. I will analyze the small block on top and "
        "flip the sense when reporting the force it returns to the lower block.",
        "Nice work noting the flip for the returned force; double-check the shared "
        "acceleration value.",
    ),
    (
        ErrorLabel.DIRECTION,
        "I will take the top block's mass times the pair's acceleration and point the "
        "answer the same way as the applied push.",
        "You chose the right object, but reconsider which way the force on the lower "
        "block must point while the pair speeds up.",
    ),
    (
        ErrorLabel.DIRECTION,
        "Multiply the upper mass by the acceleration; the contact force simply follows "
        "the push, so it acts forward on the bottom block.",
        "Check the sense of the reaction the top block applies: ask what resists the "
        "lower block's motion.",
    ),
    (
        ErrorLabel.DIRECTION,
        "Using the top block and the joint acceleration, I get the force, and I assume "
        "it drives the lower block ahead.",
        "Right object and magnitude; revisit whether the force drives the lower block "
        "ahead or holds it back.",
    ),
    (
        ErrorLabel.POSITION,
        "I will multiply the bottom block's larger mass by the acceleration, because "
        "the push acts on it, and point the result backward.",
        "Your sense of the force is right, but re-read which block the question asks "
        "about before choosing the mass.",
    ),
    (
        ErrorLabel.POSITION,
        "Since the push is applied underneath, the lower block's mass times the "
        "acceleration gives the contact force between them, acting backward.",
        "Careful with the object: the asked-for force involves the block on top, not "
        "the one receiving the push.",
    ),
    (
        ErrorLabel.POSITION,
        "The force between the blocks should use the mass of the block being pushed, "
        "so I take the lower one and keep the backward sense.",
        "The backward sense is right; check again whose mass belongs in the product.",
    ),
    (
        ErrorLabel.POSITION_DIRECTION,
        "I will use the combined mass of the stack times the acceleration and point the "
        "result along the push, since everything moves that way.",
        "Revisit both choices here: name the single block the question asks about, and "
        "ask which way its reaction acts.",
    ),
    (
        ErrorLabel.POSITION_DIRECTION,
        "Take the whole system's mass, multiply by acceleration, and the force between "
        "the blocks follows the push forward.",
        "Two things to tighten: the object is one block, not the stack, and the "
        "reaction opposes the motion trend.",
    ),
    (
        ErrorLabel.POSITION_DIRECTION,
        "Both blocks together feel the push, so the total mass times acceleration "
        "pointing forward is the force they exchange.",
        "Separate the blocks in your analysis and reconsider the sense of the exchange "
        "before answering.",
    ),
]


def build_sample_bank() -> list[FewShotExample]:
    return [
        FewShotExample(essay_text=essay, label=label, expert_feedback=feedback)
        for label, essay, feedback in _BANK_SPEC
    ]
