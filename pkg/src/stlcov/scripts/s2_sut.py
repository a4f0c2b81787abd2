"""The stateless system c = 2a + b, d = a + 10 - b as an external process."""
from ._loop import serve


def step(inputs, state):
    a, b = inputs["a"], inputs["b"]
    return {"c": 2 * a + b, "d": a + 10 - b}, state


if __name__ == "__main__":
    serve(step)
