public class FieldCounter {
    static int calls = 0;
    static int limit = 3;

    static int bump(int v) {
        calls++;
        return v + 1;
    }

    public static int main(String[] args) {
        int x = 0;
        while (x < limit) {
            x = bump(x);
        }
        int used = calls;
        return used;
    }
}
