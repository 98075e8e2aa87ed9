package fixturelib;

public class AssertionFailedError extends RuntimeException {

    public AssertionFailedError(String message) {
        super(message);
    }
}
