package fx;

public interface Shape {
    double PI = 3.14;

    double area();

    default String describe() {
        return "shape " + area();
    }

    static Shape unit() {
        return null;
    }
}
